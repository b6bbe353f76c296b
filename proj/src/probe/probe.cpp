#include "sdistill/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sdistill/kernels/kernels.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::probe {

std::size_t ProbeDataset::tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<std::string> ProbeDataset::label_set() const {
  std::set<std::string> labels;
  for (const auto& s : sentences) labels.insert(s.labels.begin(), s.labels.end());
  return {labels.begin(), labels.end()};
}

ProbeDataset parse_probe_dataset(const std::string& text) {
  ProbeDataset d;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    TaggedSentence s;
    for (const auto& pair : split_whitespace(line)) {
      const auto slash = pair.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == pair.size()) {
        throw DataError("probe dataset line " + std::to_string(line_no) + ": bad pair '" + pair + "'");
      }
      s.tokens.push_back(pair.substr(0, slash));
      s.labels.push_back(pair.substr(slash + 1));
    }
    d.sentences.push_back(std::move(s));
  }
  return d;
}

std::string format_probe_dataset(const ProbeDataset& d) {
  std::string out;
  for (const auto& s : d.sentences) {
    if (s.tokens.size() != s.labels.size()) throw UsageError("label count differs from token count");
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out += ' ';
      out += s.tokens[i] + "/" + s.labels[i];
    }
    out += '\n';
  }
  return out;
}

ProbeDataset read_probe_dataset(const std::string& path) { return parse_probe_dataset(read_file(path)); }
void write_probe_dataset(const std::string& path, const ProbeDataset& d) {
  write_file(path, format_probe_dataset(d));
}

std::string ControlMap::format() const {
  std::string out = "# control seed=" + std::to_string(seed) + " labels=" + std::to_string(num_labels) + "\n";
  for (const auto& t : types) out += t + "\t" + label.at(t) + "\n";
  return out;
}

ControlMap make_control(const std::vector<const ProbeDataset*>& datasets, std::uint64_t seed) {
  std::set<std::string> real;
  for (const auto* d : datasets) {
    for (const auto& l : d->label_set()) real.insert(l);
  }
  if (real.empty()) throw DataError("control task over an empty dataset");
  ControlMap m;
  m.seed = seed;
  m.num_labels = real.size();
  Rng rng(derive_seed(seed, "control"));
  for (const auto* d : datasets) {
    for (const auto& s : d->sentences) {
      for (const auto& tok : s.tokens) {
        if (m.label.count(tok)) continue;
        m.types.push_back(tok);
        m.label[tok] = "C" + std::to_string(rng.below(m.num_labels));
      }
    }
  }
  return m;
}

ProbeDataset apply_control(const ProbeDataset& d, const ControlMap& map) {
  ProbeDataset out = d;
  for (auto& s : out.sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      auto it = map.label.find(s.tokens[i]);
      if (it == map.label.end()) throw DataError("word type '" + s.tokens[i] + "' missing from control map");
      s.labels[i] = it->second;
    }
  }
  return out;
}

LinearProbe::LinearProbe(std::size_t classes, std::size_t width)
    : classes_(classes), width_(width), w_(classes * width, 0.0), b_(classes, 0.0) {
  if (classes == 0) throw UsageError("probe needs at least one class");
}

std::size_t LinearProbe::predict(std::span<const double> x) const {
  std::vector<double> z(classes_);
  neural::affine(w_, x, b_, z);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

void LinearProbe::sgd_update(std::span<const double> x, std::size_t label, double lr) {
  std::vector<double> z(classes_);
  neural::affine(w_, x, b_, z);
  neural::softmax(z, z);
  z[label] -= 1.0;
  for (std::size_t c = 0; c < classes_; ++c) {
    const double g = -lr * z[c];
    b_[c] += g;
    kernels::axpy(g, x, std::span<double>(w_.data() + c * width_, width_));
  }
}

LinearProbe train_linear_probe(const std::vector<std::vector<double>>& vectors,
                               const std::vector<std::size_t>& labels, std::size_t classes,
                               const ProbeConfig& cfg) {
  if (vectors.size() != labels.size()) throw UsageError("probe inputs misaligned");
  if (vectors.empty()) throw DataError("probe training set is empty");
  const std::size_t width = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != width) throw UsageError("probe vectors have mixed widths");
  }
  LinearProbe p(classes, width);
  std::vector<std::size_t> order(vectors.size());
  for (int e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, "probe-shuffle", static_cast<std::uint64_t>(e)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i : order) p.sgd_update(vectors[i], labels[i], cfg.learning_rate);
  }
  for (double w : p.weights()) {
    if (!std::isfinite(w)) throw NumericalError("probe training diverged");
  }
  return p;
}

double evaluate_probe(const LinearProbe& p, const std::vector<std::vector<double>>& vectors,
                      const std::vector<std::size_t>& labels) {
  if (vectors.size() != labels.size()) throw UsageError("probe inputs misaligned");
  if (vectors.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) hit += p.predict(vectors[i]) == labels[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(vectors.size());
}

std::string format_probe_report(const std::vector<ProbeResult>& rows) {
  std::string out = "model\tprobe_acc\tcontrol_acc\tselectivity\tseed\n";
  for (const auto& r : rows) {
    out += r.model + "\t" + format_double(r.probe_accuracy) + "\t" + format_double(r.control_accuracy) +
           "\t" + format_double(r.selectivity) + "\t" + std::to_string(r.seed) + "\n";
  }
  return out;
}

namespace {

struct Encoded {
  std::vector<std::vector<double>> vectors;
  std::vector<std::size_t> labels;
};

Encoded encode_dataset(const ProbeDataset& d, const Encoder& encode, const corpus::Vocabulary& vocab,
                       const std::vector<std::string>& label_names, int jobs) {
  std::vector<std::vector<std::vector<double>>> per(d.sentences.size());
  parallel_for(d.sentences.size(), jobs, [&](std::size_t s) {
    per[s] = encode(vocab.encode(d.sentences[s].tokens));
  });
  Encoded out;
  for (std::size_t s = 0; s < d.sentences.size(); ++s) {
    for (std::size_t i = 0; i < d.sentences[s].labels.size(); ++i) {
      const auto& l = d.sentences[s].labels[i];
      auto it = std::lower_bound(label_names.begin(), label_names.end(), l);
      // Labels unseen in training can never be predicted; they stay as wrong answers.
      out.labels.push_back(it != label_names.end() && *it == l
                               ? static_cast<std::size_t>(it - label_names.begin())
                               : label_names.size());
      out.vectors.push_back(std::move(per[s][i]));
    }
  }
  return out;
}

// Per-dimension z-scores with training-split statistics, applied to both
// splits; constant dimensions are only centred.
void standardize(std::vector<std::vector<double>>& train, std::vector<std::vector<double>>& test) {
  if (train.empty()) return;
  const std::size_t width = train.front().size();
  std::vector<double> mean(width, 0.0), sd(width, 0.0);
  for (const auto& v : train) {
    for (std::size_t k = 0; k < width; ++k) mean[k] += v[k];
  }
  for (auto& m : mean) m /= static_cast<double>(train.size());
  for (const auto& v : train) {
    for (std::size_t k = 0; k < width; ++k) sd[k] += (v[k] - mean[k]) * (v[k] - mean[k]);
  }
  for (auto& s : sd) {
    s = std::sqrt(s / static_cast<double>(train.size()));
    if (!(s > 1e-12)) s = 1.0;
  }
  for (auto* split : {&train, &test}) {
    for (auto& v : *split) {
      if (v.size() != width) throw UsageError("probe vectors have mixed widths");
      for (std::size_t k = 0; k < width; ++k) v[k] = (v[k] - mean[k]) / sd[k];
    }
  }
}

std::pair<double, std::size_t> fit_and_score(const ProbeDataset& train, const ProbeDataset& test,
                                             const Encoder& encode, const corpus::Vocabulary& vocab,
                                             const ProbeConfig& cfg, int jobs) {
  const auto names = train.label_set();
  auto tr = encode_dataset(train, encode, vocab, names, jobs);
  auto te = encode_dataset(test, encode, vocab, names, jobs);
  standardize(tr.vectors, te.vectors);
  const auto probe = train_linear_probe(tr.vectors, tr.labels, names.size(), cfg);
  return {evaluate_probe(probe, te.vectors, te.labels), names.size()};
}

}  // namespace

ProbeResult run_probe(const std::string& model_name, const Encoder& encode, const corpus::Vocabulary& vocab,
                      const ProbeDataset& train, const ProbeDataset& test, std::uint64_t control_seed,
                      const ProbeConfig& cfg, int jobs) {
  const auto control = make_control({&train, &test}, control_seed);
  ProbeResult r;
  r.model = model_name;
  r.seed = control_seed;
  r.probe_accuracy = fit_and_score(train, test, encode, vocab, cfg, jobs).first;
  r.control_accuracy =
      fit_and_score(apply_control(train, control), apply_control(test, control), encode, vocab, cfg, jobs).first;
  r.selectivity = selectivity(r.probe_accuracy, r.control_accuracy);
  return r;
}

}  // namespace sdistill::probe
