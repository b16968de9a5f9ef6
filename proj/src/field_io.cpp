#include "ftlab/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ftlab {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json field_to_json(const ScalarField& f) {
  nlohmann::json j;
  j["d"] = f.grid.d;
  j["n"] = f.grid.n;
  j["margin"] = f.grid.margin;
  j["values"] = f.v;
  return j;
}

ScalarField field_from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  const int margin = j.value("margin", 1);
  GridSpec g = GridSpec::make(d, n, margin);
  ScalarField f = ScalarField::zeros(g);
  const auto& vals = j.at("values");
  if (static_cast<long>(vals.size()) != g.total_nodes())
    throw std::invalid_argument("field values length does not match n^d");
  for (long i = 0; i < g.total_nodes(); ++i) f.v[i] = vals[i].get<double>();
  return f;
}

std::string field_to_csv(const ScalarField& f, const std::string& config_hash) {
  std::ostringstream os;
  os << "# ftlab " << kArtifactVersion;
  if (!config_hash.empty()) os << " config_hash=" << config_hash;
  os << "\n";
  const GridSpec& g = f.grid;
  const long rows = g.total_nodes() / g.n;
  for (long r = 0; r < rows; ++r) {
    for (int c = 0; c < g.n; ++c) {
      if (c) os << ",";
      os << format_double(f.v[r * g.n + c]);
    }
    os << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ftlab
