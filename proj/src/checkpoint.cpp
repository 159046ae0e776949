#include "spikenas/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

#include "spikenas/errors.hpp"

namespace spikenas {

namespace {
constexpr char kMagic[4] = {'S', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ofstream& f, uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::ifstream& f) {
  uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::ifstream& f) {
  uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<ParamRef<float>>& state) {
  nlohmann::json header = meta;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : state) {
    nlohmann::json t;
    t["name"] = p.name;
    t["dims"] = p.value->dims();
    tensors.push_back(t);
  }
  header["tensors"] = tensors;
  const std::string header_str = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u64(f, header_str.size());
  f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& p : state)
    f.write(reinterpret_cast<const char*>(p.value->data()),
            static_cast<std::streamsize>(p.value->numel() * sizeof(float)));
  if (!f) throw DataError("write failed for checkpoint " + path);
}

namespace {

nlohmann::json read_header(std::ifstream& f, const std::string& path) {
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path + ": not a checkpoint file");
  const uint32_t version = read_u32(f);
  if (version != kVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  const uint64_t len = read_u64(f);
  std::string header_str(len, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!f) throw DataError(path + ": truncated header");
  return nlohmann::json::parse(header_str);
}

}  // namespace

nlohmann::json load_checkpoint(const std::string& path, const std::vector<ParamRef<float>>& state) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path);
  nlohmann::json header = read_header(f, path);

  std::unordered_map<std::string, const ParamRef<float>*> by_name;
  for (const auto& p : state) by_name[p.name] = &p;

  size_t filled = 0;
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name");
    const std::vector<int64_t> dims = t.at("dims").get<std::vector<int64_t>>();
    int64_t count = dims.empty() ? 0 : 1;
    for (int64_t d : dims) count *= d;
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      f.seekg(static_cast<std::streamoff>(count * sizeof(float)), std::ios::cur);
      continue;
    }
    const ParamRef<float>* p = it->second;
    if (p->value->dims() != dims)
      throw DataError(path + ": tensor '" + name + "' has shape mismatch");
    f.read(reinterpret_cast<char*>(p->value->data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    if (!f) throw DataError(path + ": truncated tensor '" + name + "'");
    ++filled;
  }
  if (filled != state.size())
    throw DataError(path + ": checkpoint is missing " + std::to_string(state.size() - filled) +
                    " tensors expected by the model");
  return header;
}

nlohmann::json peek_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path);
  return read_header(f, path);
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace spikenas
