#include "glyfe/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include <boost/property_tree/detail/rapidxml.hpp>

#include "glyfe/errors.hpp"

namespace glyfe::ingest {

namespace rx = boost::property_tree::detail::rapidxml;

void CsvSchema::validate() const {
  if (timestamp_column.empty() || glucose_column.empty() || cho_column.empty() ||
      insulin_column.empty())
    throw SchemaError("csv schema: all four columns must be named");
  if (step <= 0 || 3600 % step != 0) throw SchemaError("csv schema: step must divide 3600");
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw FormatError("not a number: '" + std::string(text) + "'");
  return v;
}

Timestamp parse_timestamp(std::string_view text, const std::string& format,
                          std::int64_t utc_offset) {
  if (format == "epoch") {
    std::int64_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
      throw FormatError("timestamp '" + std::string(text) + "' is not integer epoch seconds");
    return v;
  }
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in >> std::get_time(&tm, format.c_str());
  if (in.fail())
    throw FormatError("timestamp '" + std::string(text) + "' does not match format '" + format +
                      "'");
  in >> std::ws;
  if (!in.eof())
    throw FormatError("trailing characters in timestamp '" + std::string(text) + "'");
  return static_cast<Timestamp>(timegm(&tm)) - utc_offset;
}

std::string format_timestamp(Timestamp t, const std::string& format, std::int64_t utc_offset) {
  if (format == "epoch") return std::to_string(t);
  const std::time_t local = static_cast<std::time_t>(t + utc_offset);
  std::tm tm{};
  gmtime_r(&local, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, format.c_str());
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// ---------------------------------------------------------------- Ohio XML

namespace {

struct PointEvent {
  Timestamp t;
  double value;
  bool operator<(const PointEvent& o) const { return std::tie(t, value) < std::tie(o.t, o.value); }
};

struct SpanEvent {
  Timestamp begin;
  Timestamp end;
  double value;
  bool operator<(const SpanEvent& o) const {
    return std::tie(begin, end, value) < std::tie(o.begin, o.end, o.value);
  }
};

std::pair<std::size_t, std::size_t> line_column(const std::vector<char>& buf, const char* where) {
  std::size_t line = 1;
  std::size_t col = 1;
  const char* end = where;
  if (where < buf.data() || where > buf.data() + buf.size()) end = buf.data();
  for (const char* p = buf.data(); p < end; ++p) {
    if (*p == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const char* attribute(rx::xml_node<>* node, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (auto* a = node->first_attribute(n)) return a->value();
  }
  return nullptr;
}

rx::xml_node<>* child(rx::xml_node<>* root, const char* name) { return root->first_node(name); }

std::vector<PointEvent> point_events(rx::xml_node<>* list, std::initializer_list<const char*> ts,
                                     std::initializer_list<const char*> value,
                                     const OhioOptions& opt) {
  std::vector<PointEvent> out;
  if (!list) return out;
  for (auto* ev = list->first_node("event"); ev; ev = ev->next_sibling("event")) {
    const char* t = attribute(ev, ts);
    const char* v = attribute(ev, value);
    if (!t || !v) throw FormatError(std::string("event in <") + list->name() +
                                    "> lacks a timestamp or value attribute");
    out.push_back({parse_timestamp(t, opt.timestamp_format, opt.utc_offset), parse_number(v)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SpanEvent> span_events(rx::xml_node<>* list, std::initializer_list<const char*> value,
                                   const OhioOptions& opt) {
  std::vector<SpanEvent> out;
  if (!list) return out;
  for (auto* ev = list->first_node("event"); ev; ev = ev->next_sibling("event")) {
    const char* b = attribute(ev, {"ts_begin", "ts"});
    const char* e = attribute(ev, {"ts_end"});
    const char* v = attribute(ev, value);
    if (!b || !v) throw FormatError(std::string("event in <") + list->name() +
                                    "> lacks a timestamp or value attribute");
    const Timestamp begin = parse_timestamp(b, opt.timestamp_format, opt.utc_offset);
    Timestamp end = e ? parse_timestamp(e, opt.timestamp_format, opt.utc_offset) : begin;
    if (end < begin) end = begin;
    out.push_back({begin, end, parse_number(v)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Spreads amount uniformly over [begin, end) into the slots it overlaps.
void spread(std::vector<double>& dest, const TimeGrid& grid, Timestamp begin, Timestamp end,
            double amount) {
  if (end <= begin) {
    if (begin >= grid.start && begin < grid.end()) dest[slot_of(grid, begin)] += amount;
    return;
  }
  const double rate = amount / static_cast<double>(end - begin);
  const Timestamp lo = std::max(begin, grid.start);
  const Timestamp hi = std::min(end, grid.end());
  for (Timestamp s = lo; s < hi;) {
    const std::size_t k = slot_of(grid, s);
    const Timestamp slot_end = std::min(grid.time_at(k + 1), hi);
    dest[k] += rate * static_cast<double>(slot_end - s);
    s = slot_end;
  }
}

}  // namespace

PatientRecord parse_ohio_xml(std::string_view bytes, const OhioOptions& options) {
  std::vector<char> buf(bytes.begin(), bytes.end());
  buf.push_back('\0');
  rx::xml_document<> doc;
  try {
    doc.parse<rx::parse_validate_closing_tags>(buf.data());
  } catch (const rx::parse_error& e) {
    auto [line, col] = line_column(buf, e.where<char>());
    throw ParseError(std::string("malformed XML: ") + e.what(), line, col);
  }
  rx::xml_node<>* root = doc.first_node("patient");
  if (!root) throw FormatError("XML root element must be <patient>");
  const char* id = attribute(root, {"id"});
  if (!id) throw FormatError("<patient> lacks an id attribute");

  const auto glucose = point_events(child(root, "glucose_level"), {"ts"}, {"value"}, options);
  const auto meals = point_events(child(root, "meal"), {"ts"}, {"carbs", "value"}, options);
  const auto boluses = span_events(child(root, "bolus"), {"dose", "value"}, options);
  std::vector<PointEvent> basal;
  std::vector<SpanEvent> temp_basal;
  if (!options.bolus_only) {
    basal = point_events(child(root, "basal"), {"ts"}, {"value"}, options);
    temp_basal = span_events(child(root, "temp_basal"), {"value"}, options);
  }
  if (glucose.empty()) throw EmptyRecordError(std::string("patient ") + id + ": no glucose events");

  Timestamp first = glucose.front().t;
  Timestamp last = glucose.back().t;
  for (const auto& m : meals) {
    first = std::min(first, m.t);
    last = std::max(last, m.t);
  }
  for (const auto& b : boluses) {
    first = std::min(first, b.begin);
    last = std::max(last, b.begin);
  }

  const std::int64_t step = kCgmStep;
  auto nearest = [&](Timestamp t) {
    const std::int64_t d = t - first;
    std::int64_t k = d / step;
    if (2 * (d % step) > step) ++k;  // ties go to the earlier slot
    return static_cast<std::size_t>(k);
  };
  std::size_t length = static_cast<std::size_t>((last - first) / step) + 1;
  length = std::max(length, nearest(glucose.back().t) + 1);
  const TimeGrid grid{first, step, length};

  std::vector<std::optional<double>> g(length);
  for (const auto& e : glucose) g[nearest(e.t)] = e.value;  // sorted: latest wins

  std::vector<double> cho(length, 0.0);
  for (const auto& m : meals) cho[slot_of(grid, m.t)] += m.value;

  std::vector<double> insulin(length, 0.0);
  for (const auto& b : boluses) spread(insulin, grid, b.begin, b.end, b.value);

  if (!basal.empty() || !temp_basal.empty()) {
    std::vector<Timestamp> edges{grid.start, grid.end()};
    for (const auto& b : basal) edges.push_back(b.t);
    for (const auto& t : temp_basal) {
      edges.push_back(t.begin);
      edges.push_back(t.end);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const Timestamp a = std::max(edges[i], grid.start);
      const Timestamp b = std::min(edges[i + 1], grid.end());
      if (b <= a) continue;
      double rate = 0.0;  // U/h
      bool temp = false;
      for (const auto& tb : temp_basal) {
        if (tb.begin <= a && a < tb.end) {
          rate = tb.value;
          temp = true;
        }
      }
      if (!temp) {
        auto it = std::upper_bound(basal.begin(), basal.end(), PointEvent{a, INFINITY});
        if (it != basal.begin()) rate = std::prev(it)->value;
      }
      if (rate > 0.0) spread(insulin, grid, a, b, rate * static_cast<double>(b - a) / 3600.0);
    }
  }

  return PatientRecord(id, Source::ohio_xml, grid, std::move(g), std::move(cho),
                       std::move(insulin), options.utc_offset);
}

PatientRecord read_ohio_file(const std::filesystem::path& path, const OhioOptions& options) {
  return parse_ohio_xml(read_file(path), options);
}

// --------------------------------------------------------------------- CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

PatientRecord parse_csv(std::string_view bytes, const CsvSchema& schema, std::string patient_id) {
  schema.validate();
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    std::string_view line = trim(bytes.substr(pos, nl - pos));
    if (!line.empty()) lines.push_back(line);
    pos = nl + 1;
  }
  if (lines.empty()) throw SchemaError("csv: missing header row");

  const auto header = split_fields(lines[0]);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw SchemaError("csv: missing column '" + name + "'");
  };
  const std::size_t ct = column(schema.timestamp_column);
  const std::size_t cg = column(schema.glucose_column);
  const std::size_t cc = column(schema.cho_column);
  const std::size_t ci = column(schema.insulin_column);
  if (lines.size() < 2) throw EmptyRecordError("csv: no data rows");

  struct Row {
    Timestamp t;
    std::optional<double> g;
    double cho;
    double ins;
  };
  std::vector<Row> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_fields(lines[r]);
    const std::size_t need = std::max({ct, cg, cc, ci}) + 1;
    if (f.size() < need) throw CellError("csv: too few cells", r);
    Row row{};
    try {
      row.t = parse_timestamp(trim(f[ct]), schema.timestamp_format, schema.utc_offset);
      const auto gcell = trim(f[cg]);
      if (!gcell.empty()) row.g = parse_number(gcell);
      const auto ccell = trim(f[cc]);
      const auto icell = trim(f[ci]);
      row.cho = ccell.empty() ? 0.0 : parse_number(ccell);
      row.ins = icell.empty() ? 0.0 : parse_number(icell);
    } catch (const FormatError& e) {
      throw CellError(std::string("csv: ") + e.what(), r);
    }
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });

  const Timestamp start = rows.front().t;
  const std::int64_t step = schema.step;
  const std::size_t length = static_cast<std::size_t>((rows.back().t - start) / step) + 1;
  const TimeGrid grid{start, step, length};
  std::vector<std::optional<double>> g(length);
  std::vector<double> cho(length, 0.0);
  std::vector<double> ins(length, 0.0);
  for (const auto& row : rows) {
    const std::size_t k = slot_of(grid, row.t);
    if (row.g) g[k] = row.g;
    cho[k] += row.cho;
    ins[k] += row.ins;
  }
  return PatientRecord(std::move(patient_id), Source::csv, grid, std::move(g), std::move(cho),
                       std::move(ins), schema.utc_offset);
}

std::string write_csv(const PatientRecord& record, const CsvSchema& schema) {
  schema.validate();
  std::string out;
  out.reserve(record.size() * 32);
  out += schema.timestamp_column + "," + schema.glucose_column + "," + schema.cho_column + "," +
         schema.insulin_column + "\n";
  const auto& grid = record.grid();
  for (std::size_t i = 0; i < record.size(); ++i) {
    out += format_timestamp(grid.time_at(i), schema.timestamp_format, record.utc_offset());
    out += ',';
    if (record.glucose()[i]) out += format_number(*record.glucose()[i]);
    out += ',';
    out += format_number(record.cho()[i]);
    out += ',';
    out += format_number(record.insulin()[i]);
    out += '\n';
  }
  return out;
}

PatientRecord read_csv_file(const std::filesystem::path& path, const CsvSchema& schema) {
  return parse_csv(read_file(path), schema, path.stem().string());
}

}  // namespace glyfe::ingest
