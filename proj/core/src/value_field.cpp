#include "rcis/value_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rcis/errors.hpp"

namespace rcis {

std::string_view to_string(ValueKind kind) {
  return kind == ValueKind::lower ? "lower" : "upper";
}

ValueKind parse_value_kind(std::string_view text) {
  if (text == "lower") return ValueKind::lower;
  if (text == "upper") return ValueKind::upper;
  throw ConfigError("unknown value kind '" + std::string(text) + "' (expected lower|upper)");
}

std::string format_scalar(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void ValueField::validate() const {
  if (values.size() != grid.size()) {
    throw ShapeError("value field: " + std::to_string(values.size()) + " values for a grid of " +
                     std::to_string(grid.size()) + " nodes");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DomainError("value field: non-finite value at node " + std::to_string(i));
    }
  }
  if (!(gamma > 0.0)) throw DomainError("value field: gamma must be positive");
}

double ValueField::min() const { return *std::min_element(values.begin(), values.end()); }
double ValueField::max() const { return *std::max_element(values.begin(), values.end()); }

double interpolate(const ValueField& field, std::span<const double> point) {
  return field.grid.interpolate(field.values, point);
}

std::pair<Vec, Vec> one_sided_gradients(const ValueField& field, std::span<const std::size_t> idx) {
  return field.grid.one_sided_gradients(field.values, idx);
}

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_scalar(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::vector<T> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(std::stod(tok, &used));
      } else {
        out.push_back(static_cast<T>(std::stoull(tok, &used)));
      }
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw IoError("value field: bad number '" + tok + "' for key '" + key + "'");
    }
  }
  return out;
}

}  // namespace

void write_value_field(std::ostream& os, const ValueField& field) {
  field.validate();
  os << "dim = " << field.grid.dim() << '\n';
  os << "lower = " << join(field.grid.lower()) << '\n';
  os << "upper = " << join(field.grid.upper()) << '\n';
  os << "counts = " << join(field.grid.counts()) << '\n';
  os << "gamma = " << format_scalar(field.gamma) << '\n';
  os << "kind = " << to_string(field.kind) << '\n';
  os << '\n';
  for (double v : field.values) os << format_scalar(v) << '\n';
}

ValueField read_value_field(std::istream& is) {
  std::map<std::string, std::string> header;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("value field: line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"dim", "lower", "upper", "counts", "gamma", "kind"}) {
    if (!header.count(key)) throw IoError(std::string("value field: missing header key '") + key + "'");
  }
  for (const auto& [key, _] : header) {
    static const char* known[] = {"dim", "lower", "upper", "counts", "gamma", "kind"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      throw IoError("value field: unknown header key '" + key + "'");
    }
  }
  const auto dim = parse_list<std::size_t>("dim", header["dim"]);
  auto lower = parse_list<double>("lower", header["lower"]);
  auto upper = parse_list<double>("upper", header["upper"]);
  auto counts = parse_list<std::size_t>("counts", header["counts"]);
  const auto gamma = parse_list<double>("gamma", header["gamma"]);
  if (dim.size() != 1 || gamma.size() != 1 || lower.size() != dim[0] || upper.size() != dim[0] ||
      counts.size() != dim[0]) {
    throw IoError("value field: inconsistent header dimensions");
  }
  ValueField field;
  try {
    field.grid = Grid(std::move(lower), std::move(upper), std::move(counts));
    field.kind = parse_value_kind(header["kind"]);
  } catch (const ConfigError& e) {
    throw IoError(std::string("value field: ") + e.what());
  }
  field.gamma = gamma[0];
  field.values.reserve(field.grid.size());
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto v = parse_list<double>("values", line);
    if (v.size() != 1) throw IoError("value field: line " + std::to_string(line_no) + ": one value expected");
    field.values.push_back(v[0]);
  }
  try {
    field.validate();
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  return field;
}

void save_value_field(const std::string& path, const ValueField& field) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_value_field(os, field);
  if (!os) throw IoError("write failed for '" + path + "'");
}

ValueField load_value_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open value field '" + path + "'");
  return read_value_field(is);
}

}  // namespace rcis
