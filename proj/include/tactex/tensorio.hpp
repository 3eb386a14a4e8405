#pragma once

#include <string>
#include <vector>

namespace tactex {

// Shared raw-tensor file: one JSON header line
//   {"dtype":"f32","shape":[...],"layout":"row-major","endianness":"little"}
// terminated by '\n', then the packed little-endian float32 blob.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  size_t element_count() const;
};

Tensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& t);

}  // namespace tactex
