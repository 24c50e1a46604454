// Copyright 2026 The fbp Authors
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

#include "fbp/tensor.hpp"

#include "fbp/error.hpp"

namespace fbp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kIngestion: return "ingestion error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) fail(ErrorKind::kShape, "tensor shape must have at least one axis");
  for (auto e : shape) {
    if (e == 0) fail(ErrorKind::kShape, "tensor extent must be >= 1, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(element_count(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (element_count(shape_) != data_.size()) {
    fail(ErrorKind::kShape, "tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

}  // namespace fbp
