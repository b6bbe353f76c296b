#pragma once

#include <string>
#include <vector>

#include "sdistill/distill/corrupt.hpp"
#include "sdistill/distill/targets.hpp"

namespace sdistill::distill {

inline constexpr int kKdFormatVersion = 1;

struct KdRecord {
  CorruptionRecord corruption;
  std::vector<KDTarget> targets;  // aligned with corruption.masked
  friend bool operator==(const KdRecord&, const KdRecord&) = default;
};

struct KdDataset {
  std::string vocab_hash;
  std::size_t top_k = 64;
  double alpha = 0.5;
  KdMode mode = KdMode::kNone;
  std::vector<KdRecord> records;
  friend bool operator==(const KdDataset&, const KdDataset&) = default;

  std::size_t masked_positions() const;
};

// Header "# sdistill-kd <version> vocab=.. k=.. alpha=.. mode=..", then per
// record: ids \t corrupted ids \t masked positions \t "id:p id:p|id:p ..".
std::string format_kd_dataset(const KdDataset& d);
KdDataset parse_kd_dataset(const std::string& text, const std::string& expected_vocab_hash);
void write_kd_dataset(const std::string& path, const KdDataset& d);
KdDataset read_kd_dataset(const std::string& path, const std::string& expected_vocab_hash);

}  // namespace sdistill::distill
