#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wplab {

enum class Relation { kLessEqual, kGreaterEqual, kWithin };

/// One checked claim: measured value against a bound with tolerance.
/// For kWithin the claim is |measured - bound| <= tolerance.
struct ClaimRecord {
  std::string id;        // stable identifier, e.g. "volume_upper"
  std::string anchor;    // statement the check supports
  std::string context;   // case / level / parameters
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::kLessEqual;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();
};

/// Builds a record and evaluates pass/fail from the relation.
ClaimRecord make_claim(std::string id, std::string anchor, std::string context, double measured,
                       Relation relation, double bound, double tolerance);

class VerificationReport {
 public:
  void add(ClaimRecord record) { records_.push_back(std::move(record)); }
  void merge(const VerificationReport& other);
  const std::vector<ClaimRecord>& records() const { return records_; }

  /// True iff every record passes (vacuously true when empty).
  bool passed() const;
  std::size_t failures() const;

  nlohmann::json& provenance() { return provenance_; }
  const nlohmann::json& provenance() const { return provenance_; }

  nlohmann::json to_json() const;
  /// One row per record; header id,anchor,context,relation,measured,bound,tolerance,pass.
  std::string to_csv() const;

 private:
  std::vector<ClaimRecord> records_;
  nlohmann::json provenance_ = nlohmann::json::object();
};

std::string_view to_string(Relation r);

/// Shortest round-trip decimal form; used for every number written to CSV.
std::string format_double(double v);

/// 64-bit FNV-1a hash, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace wplab
