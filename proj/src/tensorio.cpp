#include "tactex/tensorio.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tactex {

using nlohmann::json;

size_t Tensor::element_count() const {
  size_t n = 1;
  for (int s : shape) n *= size_t(s);
  return shape.empty() ? 0 : n;
}

Tensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open tensor file: " + path);
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("missing tensor header: " + path);

  json j = json::parse(header);
  if (j.value("dtype", "") != "f32") throw std::runtime_error("unsupported tensor dtype in " + path);
  if (j.value("endianness", "little") != "little")
    throw std::runtime_error("unsupported tensor endianness in " + path);

  Tensor t;
  t.shape = j.at("shape").get<std::vector<int>>();
  for (int s : t.shape)
    if (s <= 0) throw std::runtime_error("bad tensor shape in " + path);

  t.data.resize(t.element_count());
  f.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size() * sizeof(float)));
  if (size_t(f.gcount()) != t.data.size() * sizeof(float))
    throw std::runtime_error("truncated tensor blob: " + path);
  return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
  if (t.data.size() != t.element_count()) throw std::runtime_error("tensor shape/data mismatch");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write tensor file: " + path);

  json j;
  j["dtype"] = "f32";
  j["shape"] = t.shape;
  j["layout"] = "row-major";
  j["endianness"] = "little";
  f << j.dump() << "\n";
  f.write(reinterpret_cast<const char*>(t.data.data()),
          std::streamsize(t.data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("short write on tensor file: " + path);
}

}  // namespace tactex
