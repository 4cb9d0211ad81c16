#include "carnot/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace carnot {

std::string double_to_string(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Algebra spec files: a small structured-text reader (TOML-style key = value
// with possibly nested, multi-line arrays; '#' starts a comment).

namespace {

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;
  const std::string& origin;

  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  void skip_ws_and_comments(bool skip_newlines) {
    while (!eof()) {
      char c = s[pos];
      if (c == '#') {
        while (!eof() && s[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' ||
                 (skip_newlines && c == '\n')) {
        ++pos;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos && i < s.size(); ++i)
      if (s[i] == '\n') ++line;
    throw IoError(origin + ":" + std::to_string(line) + ": " + msg);
  }
};

double parse_number(Cursor& c) {
  c.skip_ws_and_comments(true);
  std::size_t start = c.pos;
  while (!c.eof()) {
    char ch = c.s[c.pos];
    if ((ch >= '0' && ch <= '9') || ch == '+' || ch == '-' || ch == '.' ||
        ch == 'e' || ch == 'E')
      ++c.pos;
    else
      break;
  }
  if (c.pos == start) c.fail("expected a number");
  double v = 0.0;
  auto res = std::from_chars(c.s.data() + start, c.s.data() + c.pos, v);
  if (res.ec != std::errc{}) c.fail("bad number");
  return v;
}

// value := number | string | [ value, ... ]
struct Value {
  enum Kind { Number, String, Array } kind = Number;
  double num = 0.0;
  std::string str;
  std::vector<Value> items;
};

Value parse_value(Cursor& c) {
  c.skip_ws_and_comments(true);
  if (c.eof()) c.fail("expected a value");
  Value v;
  char ch = c.peek();
  if (ch == '[') {
    ++c.pos;
    v.kind = Value::Array;
    c.skip_ws_and_comments(true);
    while (!c.eof() && c.peek() != ']') {
      v.items.push_back(parse_value(c));
      c.skip_ws_and_comments(true);
      if (!c.eof() && c.peek() == ',') {
        ++c.pos;
        c.skip_ws_and_comments(true);
      }
    }
    if (c.eof()) c.fail("unterminated array");
    ++c.pos;  // ']'
  } else if (ch == '"') {
    ++c.pos;
    v.kind = Value::String;
    while (!c.eof() && c.peek() != '"') v.str.push_back(c.s[c.pos++]);
    if (c.eof()) c.fail("unterminated string");
    ++c.pos;
  } else {
    v.kind = Value::Number;
    v.num = parse_number(c);
  }
  return v;
}

}  // namespace

LieAlgebraSpec parse_algebra_text(const std::string& text,
                                  const std::string& origin) {
  Cursor c{text, 0, origin};
  LieAlgebraSpec spec;
  bool have_dim = false;
  while (true) {
    c.skip_ws_and_comments(true);
    if (c.eof()) break;
    std::size_t start = c.pos;
    while (!c.eof() && (std::isalnum(static_cast<unsigned char>(c.peek())) ||
                        c.peek() == '_'))
      ++c.pos;
    std::string key = text.substr(start, c.pos - start);
    if (key.empty()) c.fail("expected a key");
    c.skip_ws_and_comments(false);
    if (c.eof() || c.peek() != '=') c.fail("expected '=' after key " + key);
    ++c.pos;
    Value v = parse_value(c);

    if (key == "dim") {
      if (v.kind != Value::Number) c.fail("dim must be an integer");
      spec.dim = static_cast<int>(v.num);
      have_dim = true;
    } else if (key == "name") {
      if (v.kind != Value::String) c.fail("name must be a string");
      spec.name = v.str;
    } else if (key == "generators") {
      if (v.kind != Value::Array) c.fail("generators must be an array");
      for (const auto& it : v.items) {
        if (it.kind != Value::Number) c.fail("generator indices must be ints");
        spec.generators.push_back(static_cast<int>(it.num));
      }
    } else if (key == "brackets") {
      if (v.kind != Value::Array) c.fail("brackets must be an array");
      for (const auto& q : v.items) {
        if (q.kind != Value::Array || q.items.size() != 4)
          c.fail("each bracket entry must be a [i, j, k, c] quadruple");
        BracketEntry e;
        e.i = static_cast<int>(q.items[0].num);
        e.j = static_cast<int>(q.items[1].num);
        e.k = static_cast<int>(q.items[2].num);
        e.c = q.items[3].num;
        spec.structure.push_back(e);
      }
    } else {
      c.fail("unknown key '" + key + "'");
    }
  }
  if (!have_dim) throw IoError(origin + ": missing required key 'dim'");
  return spec;
}

LieAlgebraSpec read_algebra_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open algebra file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_algebra_text(ss.str(), path);
}

std::string algebra_to_text(const LieAlgebraSpec& spec) {
  std::ostringstream out;
  if (!spec.name.empty()) out << "name = \"" << spec.name << "\"\n";
  out << "dim = " << spec.dim << "\n";
  out << "generators = [";
  for (std::size_t i = 0; i < spec.generators.size(); ++i)
    out << (i ? ", " : "") << spec.generators[i];
  out << "]\n";
  out << "brackets = [\n";
  for (const auto& e : spec.structure)
    out << "  [" << e.i << ", " << e.j << ", " << e.k << ", "
        << double_to_string(e.c) << "],\n";
  out << "]\n";
  return out.str();
}

void write_algebra_file(const std::string& path, const LieAlgebraSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write algebra file " + path);
  out << algebra_to_text(spec);
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& origin) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{})
    throw IoError(origin + ": bad numeric field '" + s + "'");
  return v;
}

}  // namespace

Table read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty CSV");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size())
      throw IoError(path + ": ragged CSV row");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(to_double(f, path));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string table_to_csv(const Table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << double_to_string(row[i]);
    out << "\n";
  }
  return out.str();
}

void write_table_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file " + path);
  out << table_to_csv(table);
  if (!out) throw IoError("write failed for " + path);
}

CurveData read_curve_csv(const std::string& path) {
  Table t = read_table_csv(path);
  if (t.header.size() < 2 || t.header[0] != "t")
    throw IoError(path + ": curve CSV must start with a 't' column");
  CurveData c;
  for (const auto& row : t.rows) {
    c.times.push_back(row[0]);
    Vec p(static_cast<int>(row.size()) - 1);
    for (std::size_t i = 1; i < row.size(); ++i)
      p[static_cast<int>(i) - 1] = row[i];
    c.points.push_back(p);
  }
  return c;
}

std::string curve_to_csv(const CurveData& curve) {
  Table t;
  t.header.push_back("t");
  int dim = curve.points.empty() ? 0 : static_cast<int>(curve.points[0].size());
  for (int i = 1; i <= dim; ++i) t.header.push_back("x_" + std::to_string(i));
  for (std::size_t s = 0; s < curve.times.size(); ++s) {
    std::vector<double> row;
    row.push_back(curve.times[s]);
    for (int i = 0; i < dim; ++i) row.push_back(curve.points[s][i]);
    t.rows.push_back(std::move(row));
  }
  return table_to_csv(t);
}

void write_curve_csv(const std::string& path, const CurveData& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write curve CSV " + path);
  out << curve_to_csv(curve);
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Run manifests

void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["subcommand"] = m.subcommand;
  j["inputs"] = m.inputs;
  j["seed"] = m.seed;
  j["tolerance"] = m.tolerance;
  j["tool_version"] = m.tool_version;
  j["wall_time_s"] = m.wall_time_s;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace carnot
