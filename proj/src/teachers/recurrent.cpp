#include "sdistill/teachers/recurrent.hpp"

#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::teachers {

using neural::Graph;
using neural::Var;

class RecurrentCursor : public Cursor {
 public:
  explicit RecurrentCursor(const RecurrentLM* m) : m_(m) {
    const std::size_t hidden = m->cfg_.hidden;
    h_.assign(m->cfg_.layers, std::vector<double>(hidden, 0.0));
    c_ = h_;
    push(corpus::kBos);
  }
  std::unique_ptr<Cursor> clone() const override { return std::make_unique<RecurrentCursor>(*this); }

  void push(TokenId t) override {
    if (t >= m_->vocab_size_) throw DataError("token id outside vocabulary");
    const std::size_t hidden = m_->cfg_.hidden;
    const auto& embed = m_->params_.at(0).value;
    std::vector<double> x(embed.row(t).begin(), embed.row(t).end());
    std::vector<double> gates(4 * hidden), tanh_c(hidden), c_new(hidden);
    for (std::size_t l = 0; l < m_->cfg_.layers; ++l) {
      const auto& w = m_->params_.at(1 + 2 * l).value;
      const auto& b = m_->params_.at(2 + 2 * l).value;
      std::vector<double> xh(x);
      xh.insert(xh.end(), h_[l].begin(), h_[l].end());
      neural::LstmStep::forward(w.data(), b.data(), hidden, xh, c_[l], gates, h_[l], c_new, tanh_c);
      c_[l] = c_new;
      x = h_[l];
    }
  }

  void dist(std::span<double> out) const override {
    const std::size_t l = m_->cfg_.layers;
    const auto& w = m_->params_.at(1 + 2 * l).value;
    const auto& b = m_->params_.at(2 + 2 * l).value;
    std::vector<double> logits(m_->vocab_size_);
    neural::affine(w.data(), h_.back(), b.data(), logits);
    neural::softmax(logits, out, m_->mask_);
  }

 private:
  const RecurrentLM* m_;
  std::vector<std::vector<double>> h_, c_;
};

RecurrentLM::RecurrentLM(std::size_t vocab_size, const neural::TrainConfig& cfg, Direction dir)
    : vocab_size_(vocab_size), cfg_(cfg), dir_(dir), mask_(output_mask(vocab_size)) {
  cfg_.validate();
  const std::size_t e = cfg.embedding, h = cfg.hidden;
  params_.add("embed", {vocab_size, e});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = l == 0 ? e : h;
    params_.add("lstm" + std::to_string(l) + ".w", {4 * h, in + h});
    params_.add("lstm" + std::to_string(l) + ".b", {4 * h, 1});
  }
  params_.add("out.w", {vocab_size, h});
  params_.add("out.b", {vocab_size, 1});
  Rng rng(derive_seed(cfg.seed, "init"));
  params_.init_uniform(rng, cfg.init_scale);
}

Var RecurrentLM::build_loss(Graph& g, std::span<const TokenId> seq, Rng& rng) {
  const std::size_t hidden = cfg_.hidden, layers = cfg_.layers;
  std::vector<Var> w(layers), b(layers), h(layers), c(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    w[l] = g.parameter(params_.at(1 + 2 * l));
    b[l] = g.parameter(params_.at(2 + 2 * l));
    h[l] = g.zeros(hidden);
    c[l] = g.zeros(hidden);
  }
  Var wo = g.parameter(params_.at(1 + 2 * layers));
  Var bo = g.parameter(params_.at(2 + 2 * layers));
  std::vector<Var> losses;
  std::vector<double> target(vocab_size_, 0.0);
  TokenId prev = corpus::kBos;
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    const TokenId next = i < seq.size() ? seq[i] : corpus::kEos;
    if (next >= vocab_size_ || !mask_[next]) throw DataError("training token outside the output support");
    Var x = g.dropout(g.lookup(params_.at(0), prev), cfg_.dropout, rng);
    for (std::size_t l = 0; l < layers; ++l) {
      auto out = g.lstm_cell(x, h[l], c[l], w[l], b[l]);
      h[l] = out.h;
      c[l] = out.c;
      x = g.dropout(out.h, cfg_.dropout, rng);
    }
    target[next] = 1.0;
    losses.push_back(g.softmax_cross_entropy(g.affine(wo, x, bo), target, mask_));
    target[next] = 0.0;
    prev = next;
  }
  return g.sum(losses);
}

RecurrentLM RecurrentLM::train(const std::vector<std::vector<TokenId>>& corpus,
                               std::size_t vocab_size, Direction dir,
                               const neural::TrainConfig& cfg, std::vector<double>* epoch_nll) {
  if (corpus.empty()) throw DataError("recurrent LM trained on an empty corpus");
  RecurrentLM m(vocab_size, cfg, dir);
  std::vector<std::vector<TokenId>> data;
  data.reserve(corpus.size());
  for (const auto& s : corpus) data.push_back(dir == Direction::kR2L ? reversed(s) : s);
  auto hist = neural::train_sgd(m.params_, m.cfg_, data.size(),
                                [&](Graph& g, std::size_t i, Rng& rng) {
                                  return m.build_loss(g, data[i], rng);
                                });
  if (epoch_nll) {
    double tokens = 0.0;
    for (const auto& s : data) tokens += static_cast<double>(s.size() + 1);
    for (double& h : hist) h *= static_cast<double>(data.size()) / tokens;
    *epoch_nll = std::move(hist);
  }
  return m;
}

std::unique_ptr<Cursor> RecurrentLM::start() const { return std::make_unique<RecurrentCursor>(this); }

void RecurrentLM::save(const std::string& path, const std::string& vocab_hash) const {
  neural::CheckpointHeader h;
  h.model_class = "recurrent";
  h.meta = cfg_.to_map();
  h.meta["direction"] = std::string(transitions::direction_name(dir_));
  h.meta["vocab_size"] = std::to_string(vocab_size_);
  h.meta["vocab"] = vocab_hash;
  neural::save_checkpoint(path, h, params_);
}

RecurrentLM RecurrentLM::load(const std::string& path, std::size_t vocab_size,
                              const std::string& vocab_hash) {
  auto header = neural::read_checkpoint_header(path);
  if (header.model_class != "recurrent") {
    throw DataError(path + ": expected a recurrent checkpoint, found " + header.model_class);
  }
  auto meta = header.meta;
  if (meta["vocab"] != vocab_hash) throw DataError(path + ": vocabulary hash mismatch");
  if (parse_int(meta["vocab_size"]) != static_cast<long long>(vocab_size)) {
    throw DataError(path + ": vocabulary size mismatch");
  }
  const Direction dir = transitions::parse_direction(meta["direction"]);
  meta.erase("direction");
  meta.erase("vocab_size");
  meta.erase("vocab");
  RecurrentLM m(vocab_size, neural::TrainConfig::from_map(meta), dir);
  neural::load_checkpoint(path, m.params_);
  return m;
}

}  // namespace sdistill::teachers
