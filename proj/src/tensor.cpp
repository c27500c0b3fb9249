// Copyright 2026 The rulnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rulnet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rulnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
  }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " +
                                shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.back() == 0 ? 0 : data_.size() / shape_.back();
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw std::invalid_argument("tensor add shape mismatch " + shape_str(shape_) + " vs " +
                                shape_str(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected shape " + shape_str(expected) +
                                ", got " + shape_str(t.shape()));
  }
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  const auto ki = static_cast<Eigen::Index>(k);
  Map cm(c, mi, ni);
  if (!accumulate) cm.setZero();
  if (m == 0 || n == 0 || k == 0) return;
  if (!trans_a && !trans_b) {
    cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
  } else if (trans_a && !trans_b) {
    cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
  } else if (!trans_a && trans_b) {
    cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
  } else {
    cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ni, ki).transpose();
  }
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  if (w.rank() != 2 || x.rank() < 1 || x.cols() != w.dim(0)) {
    throw std::invalid_argument("matmul shape mismatch " + shape_str(x.shape()) + " * " +
                                shape_str(w.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = w.dim(1);
  Tensor y(out_shape);
  gemm(false, false, x.rows(), w.dim(1), w.dim(0), x.ptr(), w.ptr(), y.ptr(), false);
  return y;
}

void add_column_sums(const Tensor& x, Tensor& out) {
  const std::size_t n = x.cols();
  if (out.size() != n) throw std::invalid_argument("column sum size mismatch");
  const std::size_t rows = x.rows();
  const double* p = x.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[j] += p[r * n + j];
  }
}

}  // namespace rulnet
