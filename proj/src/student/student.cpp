#include "sdistill/student/student.hpp"

#include <algorithm>

#include "sdistill/distill/kd_loss.hpp"
#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::student {

using neural::Graph;
using neural::Var;

namespace {
enum Param : std::size_t { kEmbed, kFwdW, kFwdB, kBwdW, kBwdB, kOutW, kOutB };
}

StudentModel::StudentModel(std::size_t vocab_size, const neural::TrainConfig& cfg)
    : vocab_size_(vocab_size), cfg_(cfg), mask_(vocab_size, 0) {
  cfg_.validate();
  if (vocab_size <= corpus::kNumReserved) throw UsageError("vocabulary has no non-reserved tokens");
  const std::size_t e = cfg.embedding, h = cfg.hidden;
  params_.add("embed", {vocab_size, e});
  params_.add("fwd.w", {4 * h, e + h});
  params_.add("fwd.b", {4 * h, 1});
  params_.add("bwd.w", {4 * h, e + h});
  params_.add("bwd.b", {4 * h, 1});
  params_.add("out.w", {vocab_size, 2 * h});
  params_.add("out.b", {vocab_size, 1});
  Rng rng(derive_seed(cfg.seed, "init"));
  params_.init_uniform(rng, cfg.init_scale);
  for (std::size_t w = corpus::kNumReserved; w < vocab_size; ++w) mask_[w] = 1;
}

std::vector<std::vector<double>> StudentModel::encode(std::span<const TokenId> tokens) const {
  const std::size_t n = tokens.size(), h = cfg_.hidden;
  std::vector<std::vector<double>> out(n, std::vector<double>(2 * h));
  std::vector<double> gates(4 * h), tanh_c(h), c_new(h);
  auto run = [&](std::size_t w_idx, std::size_t b_idx, bool backward) {
    std::vector<double> hs(h, 0.0), cs(h, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = backward ? n - 1 - k : k;
      if (tokens[i] >= vocab_size_) throw DataError("token id outside vocabulary");
      auto row = params_.at(kEmbed).value.row(tokens[i]);
      std::vector<double> xh(row.begin(), row.end());
      xh.insert(xh.end(), hs.begin(), hs.end());
      neural::LstmStep::forward(params_.at(w_idx).value.data(), params_.at(b_idx).value.data(), h, xh,
                                cs, gates, hs, c_new, tanh_c);
      cs = c_new;
      std::copy(hs.begin(), hs.end(), out[i].begin() + (backward ? static_cast<long>(h) : 0));
    }
  };
  run(kFwdW, kFwdB, false);
  run(kBwdW, kBwdB, true);
  return out;
}

std::vector<double> StudentModel::logits(std::span<const double> encoding) const {
  std::vector<double> z(vocab_size_);
  neural::affine(params_.at(kOutW).value.data(), encoding, params_.at(kOutB).value.data(), z);
  return z;
}

std::vector<double> StudentModel::predict_masked(std::span<const TokenId> corrupted, std::size_t i) const {
  if (i >= corrupted.size()) throw UsageError("position outside the sequence");
  const auto enc = encode(corrupted);
  return neural::softmax(logits(enc[i]), mask_);
}

Var StudentModel::build_loss(Graph& g, const distill::KdRecord& record, double alpha) {
  const auto& toks = record.corruption.corrupted;
  const std::size_t n = toks.size(), h = cfg_.hidden;
  if (record.corruption.masked.empty()) throw UsageError("record has no masked positions");
  Var fw = g.parameter(params_.at(kFwdW)), fb = g.parameter(params_.at(kFwdB));
  Var bw = g.parameter(params_.at(kBwdW)), bb = g.parameter(params_.at(kBwdB));
  Var ow = g.parameter(params_.at(kOutW)), ob = g.parameter(params_.at(kOutB));
  std::vector<Var> x(n), hf(n), hb(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (toks[i] >= vocab_size_) throw DataError("token id outside vocabulary");
    x[i] = g.lookup(params_.at(kEmbed), toks[i]);
  }
  Var hs = g.zeros(h), cs = g.zeros(h);
  for (std::size_t i = 0; i < n; ++i) {
    auto o = g.lstm_cell(x[i], hs, cs, fw, fb);
    hf[i] = hs = o.h;
    cs = o.c;
  }
  hs = g.zeros(h);
  cs = g.zeros(h);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = n - 1 - k;
    auto o = g.lstm_cell(x[i], hs, cs, bw, bb);
    hb[i] = hs = o.h;
    cs = o.c;
  }
  std::vector<Var> losses;
  const std::vector<double> none(vocab_size_, 0.0);
  for (std::size_t j = 0; j < record.corruption.masked.size(); ++j) {
    const std::size_t i = record.corruption.masked[j];
    if (i >= n) throw DataError("masked position out of range");
    const TokenId truth = record.corruption.original[i];
    if (!mask_.at(truth)) throw DataError("true token outside the student's output vocabulary");
    std::vector<double> target;
    if (alpha == 0.0) {
      target = distill::mixed_target(none, truth, 0.0);
    } else {
      if (j >= record.targets.size()) throw DataError("record lacks teacher targets");
      target = distill::mixed_target(distill::densify(record.targets[j].dist, vocab_size_), truth, alpha);
    }
    Var z = g.affine(ow, g.concat({hf[i], hb[i]}), ob);
    losses.push_back(g.softmax_cross_entropy(z, target, mask_));
  }
  return g.scale(g.sum(losses), 1.0 / static_cast<double>(losses.size()));
}

void StudentModel::save(const std::string& path, const std::string& vocab_hash) const {
  neural::CheckpointHeader h;
  h.model_class = "student";
  h.meta = cfg_.to_map();
  h.meta["vocab_size"] = std::to_string(vocab_size_);
  h.meta["vocab"] = vocab_hash;
  neural::save_checkpoint(path, h, params_);
}

StudentModel StudentModel::load(const std::string& path, std::size_t vocab_size,
                                const std::string& vocab_hash) {
  auto header = neural::read_checkpoint_header(path);
  if (header.model_class != "student") {
    throw DataError(path + ": expected a student checkpoint, found " + header.model_class);
  }
  auto meta = header.meta;
  if (meta["vocab"] != vocab_hash) throw DataError(path + ": vocabulary hash mismatch");
  if (parse_int(meta["vocab_size"]) != static_cast<long long>(vocab_size)) {
    throw DataError(path + ": vocabulary size mismatch");
  }
  meta.erase("vocab_size");
  meta.erase("vocab");
  StudentModel m(vocab_size, neural::TrainConfig::from_map(meta));
  neural::load_checkpoint(path, m.params_);
  return m;
}

StudentModel train_student(const distill::KdDataset& data, std::size_t vocab_size, double alpha,
                           const neural::TrainConfig& cfg, std::vector<double>* epoch_loss) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in [0, 1]");
  std::vector<const distill::KdRecord*> usable;
  for (const auto& r : data.records) {
    if (!r.corruption.masked.empty()) usable.push_back(&r);
  }
  if (usable.empty()) throw DataError("dataset has no masked positions");
  StudentModel m(vocab_size, cfg);
  auto hist = neural::train_sgd(m.params(), m.config(), usable.size(), [&](Graph& g, std::size_t i, Rng&) {
    return m.build_loss(g, *usable[i], alpha);
  });
  if (epoch_loss) *epoch_loss = std::move(hist);
  return m;
}

distill::KdDataset plain_dataset(const std::vector<std::vector<TokenId>>& corpus, std::size_t vocab_size,
                                 const std::string& vocab_hash, std::uint64_t seed,
                                 const distill::CorruptionConfig& cc) {
  distill::KdDataset d;
  d.vocab_hash = vocab_hash;
  d.top_k = 1;
  d.alpha = 0.0;
  d.mode = distill::KdMode::kNone;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    distill::KdRecord r;
    r.corruption = distill::corrupt(corpus[s], vocab_size, derive_seed(seed, "corrupt", s), cc);
    for (std::size_t i : r.corruption.masked) r.targets.push_back({i, corpus[s][i], {{corpus[s][i], 1.0}}});
    d.records.push_back(std::move(r));
  }
  return d;
}

double masked_accuracy(const StudentModel& m, const distill::KdDataset& data) {
  std::size_t hit = 0, total = 0;
  for (const auto& r : data.records) {
    if (r.corruption.masked.empty()) continue;
    const auto enc = m.encode(r.corruption.corrupted);
    for (std::size_t i : r.corruption.masked) {
      const auto p = neural::softmax(m.logits(enc[i]), m.output_mask());
      const auto best = static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
      hit += best == r.corruption.original[i];
      ++total;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace sdistill::student
