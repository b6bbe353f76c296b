#include "sdistill/posterior/dump.hpp"

#include <algorithm>
#include <cmath>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::posterior {

std::vector<std::pair<TokenId, double>> top_k_logprobs(const std::vector<double>& dist, std::size_t k) {
  std::vector<TokenId> ids;
  for (std::size_t w = 0; w < dist.size(); ++w) {
    if (dist[w] > 0.0) ids.push_back(static_cast<TokenId>(w));
  }
  const std::size_t keep = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(keep), ids.end(),
                    [&](TokenId a, TokenId b) { return dist[a] != dist[b] ? dist[a] > dist[b] : a < b; });
  std::vector<std::pair<TokenId, double>> out;
  for (std::size_t j = 0; j < keep; ++j) out.emplace_back(ids[j], std::log(dist[ids[j]]));
  return out;
}

std::string format_posterior_dump(const std::vector<std::vector<PosteriorEstimate>>& estimates,
                                  std::size_t k, const std::string& vocab_hash) {
  std::string out = "# k=" + std::to_string(k) + " vocab=" + vocab_hash + "\n";
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    for (const auto& e : estimates[s]) {
      out += std::to_string(s) + "\t" + std::to_string(e.position) + "\t" +
             std::string(method_name(e.method)) + "\t";
      bool first = true;
      for (const auto& [id, lp] : top_k_logprobs(e.dist, k)) {
        if (!first) out += ' ';
        first = false;
        out += std::to_string(id) + ":" + format_double(lp);
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<DumpRow> parse_posterior_dump(const std::string& text, const std::string& vocab_hash,
                                          std::size_t* k_out) {
  const auto lines = split(text, '\n');
  if (lines.empty() || lines[0].rfind("# ", 0) != 0) throw DataError("posterior dump lacks a header");
  for (const auto& field : split_whitespace(lines[0].substr(2))) {
    auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    if (key == "vocab" && val != vocab_hash) throw DataError("posterior dump: vocabulary hash mismatch");
    if (key == "k" && k_out) *k_out = static_cast<std::size_t>(parse_int(val));
  }
  std::vector<DumpRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 4) throw DataError("posterior dump: bad row " + std::to_string(i + 1));
    DumpRow r;
    r.sentence = static_cast<std::size_t>(parse_int(f[0]));
    r.position = static_cast<std::size_t>(parse_int(f[1]));
    r.method = parse_method(f[2]);
    for (const auto& pair : split_whitespace(f[3])) {
      auto colon = pair.find(':');
      if (colon == std::string::npos) throw DataError("posterior dump: bad pair '" + pair + "'");
      r.top.emplace_back(static_cast<TokenId>(parse_int(pair.substr(0, colon))),
                         parse_double(pair.substr(colon + 1)));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sdistill::posterior
