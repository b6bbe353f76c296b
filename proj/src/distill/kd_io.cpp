#include "sdistill/distill/kd_io.hpp"

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::distill {
namespace {

template <typename T>
std::string join_ids(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

template <typename T>
std::vector<T> parse_ids(const std::string& s) {
  std::vector<T> out;
  for (const auto& f : split_whitespace(s)) out.push_back(static_cast<T>(parse_int(f)));
  return out;
}

}  // namespace

std::size_t KdDataset::masked_positions() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.corruption.masked.size();
  return n;
}

std::string format_kd_dataset(const KdDataset& d) {
  std::string out = "# sdistill-kd " + std::to_string(kKdFormatVersion) + " vocab=" + d.vocab_hash +
                    " k=" + std::to_string(d.top_k) + " alpha=" + format_double(d.alpha) +
                    " mode=" + std::string(mode_name(d.mode)) + "\n";
  for (const auto& r : d.records) {
    if (r.targets.size() != r.corruption.masked.size()) {
      throw UsageError("KD record targets do not match its masked positions");
    }
    out += join_ids(r.corruption.original) + "\t" + join_ids(r.corruption.corrupted) + "\t" +
           join_ids(r.corruption.masked) + "\t";
    for (std::size_t j = 0; j < r.targets.size(); ++j) {
      if (r.targets[j].position != r.corruption.masked[j]) {
        throw UsageError("KD target position does not match the masked position");
      }
      if (j) out += '|';
      bool first = true;
      for (const auto& [id, p] : r.targets[j].dist) {
        if (!first) out += ' ';
        first = false;
        out += std::to_string(id) + ":" + format_double(p);
      }
    }
    out += "\n";
  }
  return out;
}

KdDataset parse_kd_dataset(const std::string& text, const std::string& expected_vocab_hash) {
  const auto lines = split(text, '\n');
  if (lines.empty()) throw DataError("empty KD dataset");
  const auto head = split_whitespace(lines[0]);
  if (head.size() < 3 || head[0] != "#" || head[1] != "sdistill-kd") throw DataError("not a KD dataset");
  if (parse_int(head[2]) != kKdFormatVersion) throw DataError("unsupported KD dataset version " + head[2]);
  KdDataset d;
  for (std::size_t i = 3; i < head.size(); ++i) {
    auto eq = head[i].find('=');
    if (eq == std::string::npos) throw DataError("bad KD header field '" + head[i] + "'");
    const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
    if (key == "vocab") d.vocab_hash = val;
    else if (key == "k") d.top_k = static_cast<std::size_t>(parse_int(val));
    else if (key == "alpha") d.alpha = parse_double(val);
    else if (key == "mode") d.mode = parse_mode(val);
    else throw DataError("unknown KD header field '" + key + "'");
  }
  if (d.vocab_hash != expected_vocab_hash) {
    throw DataError("KD dataset vocabulary mismatch: file has " + d.vocab_hash + ", expected " +
                    expected_vocab_hash);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 4) throw DataError("KD dataset: bad record on line " + std::to_string(i + 1));
    KdRecord r;
    r.corruption.original = parse_ids<TokenId>(f[0]);
    r.corruption.corrupted = parse_ids<TokenId>(f[1]);
    r.corruption.masked = parse_ids<std::size_t>(f[2]);
    if (r.corruption.original.size() != r.corruption.corrupted.size()) {
      throw DataError("KD dataset: length mismatch on line " + std::to_string(i + 1));
    }
    const auto lists = r.corruption.masked.empty() ? std::vector<std::string>{} : split(f[3], '|');
    if (lists.size() != r.corruption.masked.size()) {
      throw DataError("KD dataset: target count mismatch on line " + std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < lists.size(); ++j) {
      KDTarget t;
      t.position = r.corruption.masked[j];
      if (t.position >= r.corruption.original.size()) throw DataError("KD dataset: position out of range");
      t.truth = r.corruption.original[t.position];
      for (const auto& pair : split_whitespace(lists[j])) {
        auto colon = pair.find(':');
        if (colon == std::string::npos) throw DataError("KD dataset: bad pair '" + pair + "'");
        t.dist.emplace_back(static_cast<TokenId>(parse_int(pair.substr(0, colon))),
                            parse_double(pair.substr(colon + 1)));
      }
      r.targets.push_back(std::move(t));
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

void write_kd_dataset(const std::string& path, const KdDataset& d) { write_file(path, format_kd_dataset(d)); }

KdDataset read_kd_dataset(const std::string& path, const std::string& expected_vocab_hash) {
  return parse_kd_dataset(read_file(path), expected_vocab_hash);
}

}  // namespace sdistill::distill
