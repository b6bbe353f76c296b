#include "sdistill/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::neural {
namespace {

constexpr std::string_view kMagic = "sdistill-checkpoint";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
  return r;
}

struct ParsedHeader {
  CheckpointHeader header;
  std::vector<std::pair<std::string, Shape>> params;
  std::size_t data_offset = 0;
};

ParsedHeader parse_header(const std::string& bytes, const std::string& path) {
  ParsedHeader out;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw DataError(path + ": truncated checkpoint header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  auto first = split_whitespace(next_line());
  if (first.size() != 2 || first[0] != kMagic) throw DataError(path + ": not a checkpoint");
  if (parse_int(first[1]) != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + first[1]);
  }
  while (true) {
    std::string line = next_line();
    if (line == "data") break;
    auto sp = line.find(' ');
    std::string key = line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "class") {
      out.header.model_class = rest;
    } else if (key == "meta") {
      auto eq = rest.find('=');
      if (eq == std::string::npos) throw DataError(path + ": bad meta line '" + line + "'");
      out.header.meta[rest.substr(0, eq)] = rest.substr(eq + 1);
    } else if (key == "param") {
      auto f = split_whitespace(rest);
      if (f.size() != 3) throw DataError(path + ": bad param line '" + line + "'");
      out.params.emplace_back(f[0], Shape{static_cast<std::size_t>(parse_int(f[1])),
                                          static_cast<std::size_t>(parse_int(f[2]))});
    } else {
      throw DataError(path + ": unknown header line '" + line + "'");
    }
  }
  out.data_offset = pos;
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParameterSet& params) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
  out += "class " + header.model_class + "\n";
  for (const auto& [k, v] : header.meta) out += "meta " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& p = params.at(i);
    out += "param " + p.name + " " + std::to_string(p.value.shape().rows) + " " +
           std::to_string(p.value.shape().cols) + "\n";
  }
  out += "data\n";
  for (std::size_t i = 0; i < params.count(); ++i) {
    for (double v : params.at(i).value.data()) {
      std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.append(buf, 8);
    }
  }
  write_file(path, out);
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  return parse_header(read_file(path), path).header;
}

CheckpointHeader load_checkpoint(const std::string& path, ParameterSet& params) {
  const std::string bytes = read_file(path);
  ParsedHeader parsed = parse_header(bytes, path);
  if (parsed.params.size() != params.count()) {
    throw DataError(path + ": parameter count mismatch");
  }
  std::size_t pos = parsed.data_offset;
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = params.at(i);
    if (parsed.params[i].first != p.name || !(parsed.params[i].second == p.value.shape())) {
      throw DataError(path + ": parameter " + std::to_string(i) + " is " + parsed.params[i].first +
                      to_string(parsed.params[i].second) + ", expected " + p.name +
                      to_string(p.value.shape()));
    }
    for (double& v : p.value.data()) {
      if (pos + 8 > bytes.size()) throw DataError(path + ": truncated parameter data");
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + pos, 8);
      v = std::bit_cast<double>(to_le(bits));
      pos += 8;
    }
  }
  if (pos != bytes.size()) throw DataError(path + ": trailing bytes after parameter data");
  return parsed.header;
}

}  // namespace sdistill::neural
