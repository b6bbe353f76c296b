#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdistill/corpus/supertags.hpp"
#include "sdistill/corpus/vocab.hpp"

namespace sdistill::probe {

using corpus::TaggedSentence;

struct ProbeDataset {
  std::vector<TaggedSentence> sentences;
  std::size_t tokens() const;
  // Distinct labels, sorted.
  std::vector<std::string> label_set() const;
};

// One sentence per line, space-separated "token/LABEL" pairs (split at the last '/').
ProbeDataset parse_probe_dataset(const std::string& text);
std::string format_probe_dataset(const ProbeDataset& d);
ProbeDataset read_probe_dataset(const std::string& path);
void write_probe_dataset(const std::string& path, const ProbeDataset& d);

// Word type -> random control label "C0".."C{n-1}", n = number of real labels.
struct ControlMap {
  std::uint64_t seed = 0;
  std::size_t num_labels = 0;
  std::vector<std::string> types;  // first-appearance order
  std::unordered_map<std::string, std::string> label;
  std::string format() const;  // "type \t label" lines in type order
};

// Types are visited in first-appearance order over `datasets` (e.g. train then
// test); each draws one label uniformly from derive_seed(seed, "control").
ControlMap make_control(const std::vector<const ProbeDataset*>& datasets, std::uint64_t seed);
ProbeDataset apply_control(const ProbeDataset& d, const ControlMap& map);

struct ProbeConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  std::uint64_t seed = 1;
};

// Multinomial logistic regression.
class LinearProbe {
 public:
  LinearProbe(std::size_t classes, std::size_t width);
  std::size_t predict(std::span<const double> x) const;
  std::vector<double>& weights() { return w_; }
  std::vector<double>& bias() { return b_; }
  std::size_t classes() const { return classes_; }
  std::size_t width() const { return width_; }
  void sgd_update(std::span<const double> x, std::size_t label, double lr);

 private:
  std::size_t classes_, width_;
  std::vector<double> w_, b_;
};

LinearProbe train_linear_probe(const std::vector<std::vector<double>>& vectors,
                               const std::vector<std::size_t>& labels, std::size_t classes,
                               const ProbeConfig& cfg);
// Token accuracy in percent.
double evaluate_probe(const LinearProbe& p, const std::vector<std::vector<double>>& vectors,
                      const std::vector<std::size_t>& labels);
inline double selectivity(double probe_accuracy, double control_accuracy) {
  return probe_accuracy - control_accuracy;
}

struct ProbeResult {
  std::string model;
  double probe_accuracy = 0.0;    // percent
  double control_accuracy = 0.0;  // percent
  double selectivity = 0.0;
  std::uint64_t seed = 0;
};
std::string format_probe_report(const std::vector<ProbeResult>& rows);

// Encoder: token-id sequence -> one vector per token.
using Encoder = std::function<std::vector<std::vector<double>>(std::span<const corpus::TokenId>)>;

// Trains real-label and control-label probes on `train` encodings and scores
// both on `test`. Control labels come from make_control({train, test}, control_seed).
ProbeResult run_probe(const std::string& model_name, const Encoder& encode, const corpus::Vocabulary& vocab,
                      const ProbeDataset& train, const ProbeDataset& test, std::uint64_t control_seed,
                      const ProbeConfig& cfg, int jobs = 1);

}  // namespace sdistill::probe
