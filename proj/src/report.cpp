#include "wplab/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace wplab {

ClaimRecord make_claim(std::string id, std::string anchor, std::string context, double measured,
                       Relation relation, double bound, double tolerance) {
  ClaimRecord r;
  r.id = std::move(id);
  r.anchor = std::move(anchor);
  r.context = std::move(context);
  r.measured = measured;
  r.bound = bound;
  r.tolerance = tolerance;
  r.relation = relation;
  switch (relation) {
    case Relation::kLessEqual:
      r.pass = measured <= bound + tolerance;
      break;
    case Relation::kGreaterEqual:
      r.pass = measured >= bound - tolerance;
      break;
    case Relation::kWithin:
      r.pass = std::abs(measured - bound) <= tolerance;
      break;
  }
  // NaN never passes.
  if (std::isnan(measured)) r.pass = false;
  return r;
}

void VerificationReport::merge(const VerificationReport& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

bool VerificationReport::passed() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.pass ? 0 : 1;
  return n;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kLessEqual:
      return "<=";
    case Relation::kGreaterEqual:
      return ">=";
    case Relation::kWithin:
      return "within";
  }
  return "?";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// JSON has no infinities; encode them as strings.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["overall"] = passed() ? "pass" : "fail";
  j["failures"] = failures();
  j["provenance"] = provenance_;
  nlohmann::json claims = nlohmann::json::array();
  for (const auto& r : records_) {
    claims.push_back({{"id", r.id},
                      {"anchor", r.anchor},
                      {"context", r.context},
                      {"measured", number(r.measured)},
                      {"relation", std::string(to_string(r.relation))},
                      {"bound", number(r.bound)},
                      {"tolerance", number(r.tolerance)},
                      {"pass", r.pass},
                      {"details", r.details}});
  }
  j["claims"] = std::move(claims);
  return j;
}

std::string VerificationReport::to_csv() const {
  std::ostringstream os;
  os << "id,anchor,context,relation,measured,bound,tolerance,pass\n";
  for (const auto& r : records_) {
    os << csv_field(r.id) << ',' << csv_field(r.anchor) << ',' << csv_field(r.context) << ','
       << to_string(r.relation) << ',' << format_double(r.measured) << ',' << format_double(r.bound) << ','
       << format_double(r.tolerance) << ',' << (r.pass ? "pass" : "fail") << '\n';
  }
  return os.str();
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace wplab
