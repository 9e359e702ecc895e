#include "pas/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace pas {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::string row_label(std::size_t line_no) { return "row " + std::to_string(line_no); }

double parse_double(const std::string& s, std::size_t line_no, const char* column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw InputError(row_label(line_no) + ": column '" + column + "' is not numeric: '" + s + "'");
  if (!std::isfinite(v))
    throw InputError(row_label(line_no) + ": column '" + column + "' is not finite");
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct Header {
  std::unordered_map<std::string, std::size_t> index;

  std::size_t require(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) throw InputError("missing column '" + name + "'");
    return it->second;
  }
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV: header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  Header h;
  const auto cols = split_csv_line(line);
  for (std::size_t i = 0; i < cols.size(); ++i) h.index.emplace(cols[i], i);
  return h;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

}  // namespace

double compensated_mean(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

AggregatedStats get_means(const ProblemData& p) {
  if (p.labeled.empty()) throw InputError("problem '" + p.id + "' has no labeled rows");
  if (p.unlabeled_preds.empty()) throw InputError("problem '" + p.id + "' has no unlabeled rows");
  CompensatedSum sy, sz;
  for (const auto& pair : p.labeled) {
    sy.add(pair.y);
    sz.add(pair.z);
  }
  const auto n = static_cast<double>(p.n());
  return AggregatedStats{sy.value() / n, sz.value() / n, compensated_mean(p.unlabeled_preds),
                         p.n(), p.big_n()};
}

SecondMoments sample_moments(const ProblemData& p) {
  const std::size_t n = p.n();
  const std::size_t big_n = p.big_n();
  if (n < 2)
    throw InputError("problem '" + p.id + "': sample moments need at least 2 labeled rows");

  CompensatedSum sy, sz_all;
  for (const auto& pair : p.labeled) {
    sy.add(pair.y);
    sz_all.add(pair.z);
  }
  for (double z : p.unlabeled_preds) sz_all.add(z);
  const double y_bar = sy.value() / static_cast<double>(n);
  const double z_pooled = sz_all.value() / static_cast<double>(n + big_n);

  CompensatedSum ssy, ssz, sxy;
  for (const auto& pair : p.labeled) {
    const double dy = pair.y - y_bar;
    const double dz = pair.z - z_pooled;
    ssy.add(dy * dy);
    ssz.add(dz * dz);
    sxy.add(dy * dz);
  }
  for (double z : p.unlabeled_preds) {
    const double dz = z - z_pooled;
    ssz.add(dz * dz);
  }
  SecondMoments m;
  m.sigma2 = ssy.value() / static_cast<double>(n - 1);
  m.tau2 = ssz.value() / static_cast<double>(n + big_n - 1);
  m.gamma = sxy.value() / static_cast<double>(n - 1);
  m.source = MomentSource::sample;
  return m;
}

std::vector<ProblemRows> read_rows_csv(std::istream& in) {
  const Header h = read_header(in);
  const std::size_t c_id = h.require("problem_id");
  const std::size_t c_split = h.require("split");
  const std::size_t c_y = h.require("y");
  const std::size_t c_f = h.require("f");
  const std::size_t width = std::max({c_id, c_split, c_y, c_f}) + 1;

  std::vector<ProblemRows> out;
  std::unordered_map<std::string, std::size_t> order;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < width)
      throw InputError(row_label(line_no) + ": expected at least " + std::to_string(width) +
                       " fields, got " + std::to_string(fields.size()));
    DataRow row;
    const std::string& split = fields[c_split];
    if (split == "labeled")
      row.labeled = true;
    else if (split != "unlabeled")
      throw InputError(row_label(line_no) + ": split must be 'labeled' or 'unlabeled', got '" +
                       split + "'");
    row.f = parse_double(fields[c_f], line_no, "f");
    if (!fields[c_y].empty())
      row.y = parse_double(fields[c_y], line_no, "y");
    else if (row.labeled)
      throw InputError(row_label(line_no) + ": labeled row without y");

    const std::string& id = fields[c_id];
    if (id.empty()) throw InputError(row_label(line_no) + ": empty problem_id");
    auto [it, inserted] = order.emplace(id, out.size());
    if (inserted) out.push_back(ProblemRows{id, {}});
    out[it->second].rows.push_back(row);
  }
  return out;
}

std::vector<ProblemRows> read_rows_csv(const std::string& path) {
  auto in = open_or_throw(path);
  return read_rows_csv(in);
}

void write_rows_csv(std::ostream& out, const std::vector<ProblemRows>& problems) {
  out << "problem_id,split,y,f\n";
  for (const auto& p : problems) {
    const std::string id = quote_if_needed(p.id);
    for (const auto& r : p.rows) {
      out << id << ',' << (r.labeled ? "labeled" : "unlabeled") << ',';
      if (r.y) out << format_double(*r.y);
      out << ',' << format_double(r.f) << '\n';
    }
  }
}

std::vector<ProblemData> to_problem_data(const std::vector<ProblemRows>& problems) {
  std::vector<ProblemData> out;
  out.reserve(problems.size());
  for (const auto& p : problems) {
    ProblemData d;
    d.id = p.id;
    for (const auto& r : p.rows) {
      if (r.labeled)
        d.labeled.push_back({*r.y, r.f});
      else
        d.unlabeled_preds.push_back(r.f);
    }
    if (d.labeled.empty()) throw InputError("problem '" + p.id + "' has zero labeled rows");
    if (d.unlabeled_preds.empty())
      throw InputError("problem '" + p.id + "' has zero unlabeled rows");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ProblemRows> to_rows(const std::vector<ProblemData>& problems) {
  std::vector<ProblemRows> out;
  out.reserve(problems.size());
  for (const auto& p : problems) {
    ProblemRows r{p.id, {}};
    r.rows.reserve(p.n() + p.big_n());
    for (const auto& pair : p.labeled) r.rows.push_back({pair.y, pair.z, true});
    for (double z : p.unlabeled_preds) r.rows.push_back({std::nullopt, z, false});
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ProblemData> ingest_csv(std::istream& in) { return to_problem_data(read_rows_csv(in)); }

std::vector<ProblemData> ingest_csv(const std::string& path) {
  return to_problem_data(read_rows_csv(path));
}

void write_csv(std::ostream& out, const std::vector<ProblemData>& problems) {
  write_rows_csv(out, to_rows(problems));
}

std::map<std::string, SecondMoments> read_moments_csv(std::istream& in) {
  const Header h = read_header(in);
  const std::size_t c_id = h.require("problem_id");
  const std::size_t c_s = h.require("sigma2");
  const std::size_t c_t = h.require("tau2");
  const std::size_t c_g = h.require("gamma");
  const std::size_t width = std::max({c_id, c_s, c_t, c_g}) + 1;

  std::map<std::string, SecondMoments> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < width)
      throw InputError(row_label(line_no) + ": expected at least " + std::to_string(width) +
                       " fields");
    SecondMoments m;
    m.sigma2 = parse_double(fields[c_s], line_no, "sigma2");
    m.tau2 = parse_double(fields[c_t], line_no, "tau2");
    m.gamma = parse_double(fields[c_g], line_no, "gamma");
    m.source = MomentSource::known;
    if (m.sigma2 < 0.0 || m.tau2 < 0.0)
      throw InputError(row_label(line_no) + ": variances must be non-negative");
    // Cauchy-Schwarz, with room for decimal round-off in the file.
    if (m.gamma * m.gamma > m.sigma2 * m.tau2 * (1.0 + 1e-9) + 1e-300)
      throw InputError(row_label(line_no) + ": gamma^2 exceeds sigma2*tau2");
    if (!out.emplace(fields[c_id], m).second)
      throw InputError(row_label(line_no) + ": duplicate problem_id '" + fields[c_id] + "'");
  }
  return out;
}

std::map<std::string, SecondMoments> read_moments_csv(const std::string& path) {
  auto in = open_or_throw(path);
  return read_moments_csv(in);
}

std::vector<SecondMoments> align_moments(const std::vector<ProblemData>& problems,
                                         const std::map<std::string, SecondMoments>& table) {
  std::vector<SecondMoments> out;
  out.reserve(problems.size());
  for (const auto& p : problems) {
    const auto it = table.find(p.id);
    if (it == table.end()) throw InputError("no moments given for problem '" + p.id + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace pas
