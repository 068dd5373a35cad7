#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "strokepipe/dataset.hpp"
#include "strokepipe/error.hpp"

namespace strokepipe {

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Table rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split(line));
  }
  if (rows.empty()) throw Error(ErrorCode::Format, "empty CSV file: " + path.string());
  return rows;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header,
                                                const std::filesystem::path& path,
                                                std::initializer_list<std::string_view> required) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx[header[i]] = i;
  for (auto name : required)
    if (!idx.contains(std::string(name)))
      throw Error(ErrorCode::Format, "CSV " + path.string() + " lacks column '" + std::string(name) + "'");
  return idx;
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::Format, "cannot parse number '" + text + "' (" + context + ")");
  return v;
}

int parse_binary(const std::string& text, const std::string& context) {
  const double v = parse_double(text, context);
  if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "expected 0 or 1, got '" + text + "' (" + context + ")");
  return static_cast<int>(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool parse_label(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  if (t == "stroke" || t == "1" || t == "+1") return true;
  if (t == "normal" || t == "no-stroke" || t == "non-stroke" || t == "0" || t == "-1") return false;
  throw Error(ErrorCode::Format, "unrecognised label '" + text + "'");
}

std::string label_name(bool stroke) { return stroke ? "stroke" : "normal"; }

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const auto idx = header_index(t.front(), path, {"id", "image_path", "label"});
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<ManifestRow> rows;
  for (std::size_t r = 1; r < t.size(); ++r) {
    const auto& row = t[r];
    auto cell = [&](const std::string& name) -> std::string {
      const auto it = idx.find(name);
      return it != idx.end() && it->second < row.size() ? row[it->second] : std::string();
    };
    ManifestRow m;
    m.id = cell("id");
    if (m.id.empty()) throw Error(ErrorCode::Format, "manifest row " + std::to_string(r) + " has no id");
    m.image_path = resolve(cell("image_path"));
    if (const auto mask = cell("mask_path"); !mask.empty()) m.mask_path = resolve(mask);
    m.stroke = parse_label(cell("label"));
    rows.push_back(std::move(m));
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::string out = "id,image_path,mask_path,label\n";
  for (const auto& r : rows) {
    out += r.id + ',' + r.image_path.generic_string() + ',' +
           (r.mask_path ? r.mask_path->generic_string() : std::string()) + ',' + label_name(r.stroke) + '\n';
  }
  write_file_atomic(path, out);
}

std::vector<ImageSample> load_dataset(const std::filesystem::path& manifest) {
  std::vector<ImageSample> out;
  for (const auto& row : read_manifest(manifest)) {
    try {
      GrayImage img = load_image(row.image_path);
      std::optional<std::vector<bool>> lesion;
      if (row.mask_path) {
        const GrayImage masked = apply_mask(img, *row.mask_path);
        lesion.emplace(masked.size());
        for (std::size_t i = 0; i < masked.size(); ++i) (*lesion)[i] = !(*masked.mask())[i];
      }
      out.push_back(ImageSample{row.id, std::move(img), std::move(lesion), row.stroke});
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + row.id + "': " + e.what());
    }
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureVector>& rows) {
  std::string out = "source_id,kind";
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  for (std::size_t i = 0; i < width; ++i) out += ",f" + std::to_string(i);
  out += '\n';
  for (const auto& fv : rows) {
    if (fv.size() != width) throw Error(ErrorCode::DimensionMismatch, "feature rows differ in length");
    out += fv.source_id + ',' + std::string(to_string(fv.kind));
    for (double v : fv.values) out += ',' + format_double(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  header_index(t.front(), path, {"source_id", "kind"});
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < t.size(); ++r) {
    const auto& row = t[r];
    if (row.size() != t.front().size())
      throw Error(ErrorCode::Format, "feature CSV row " + std::to_string(r) + " has the wrong column count");
    FeatureVector fv;
    fv.source_id = row[0];
    const auto kind = parse_feature_kind(row[1]);
    if (!kind) throw Error(ErrorCode::Format, "unknown feature kind '" + row[1] + "'");
    fv.kind = *kind;
    for (std::size_t c = 2; c < row.size(); ++c) fv.values.push_back(parse_double(row[c], "sample " + fv.source_id));
    out.push_back(std::move(fv));
  }
  return out;
}

void write_risk_csv(const std::filesystem::path& path, const std::vector<RiskRecord>& rows) {
  std::string out = "id";
  for (auto name : kRiskFieldNames) out += ',' + std::string(name);
  out += ",label\n";
  for (const auto& r : rows) {
    out += r.id + ',' + format_double(r.systolic_bp) + ',' + std::to_string(r.atrial_fibrillation) + ',' +
           std::to_string(r.smoker) + ',' + format_double(r.cholesterol) + ',' + std::to_string(r.diabetic) +
           ',' + std::to_string(r.exercises) + ',' + std::to_string(r.obese) + ',' +
           std::to_string(r.family_history) + ',' + format_double(r.age) + ',' + label_name(r.stroke) + '\n';
  }
  write_file_atomic(path, out);
}

std::vector<RiskRecord> read_risk_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const auto idx = header_index(t.front(), path,
                                {"systolic_bp", "atrial_fibrillation", "smoker", "cholesterol", "diabetic",
                                 "exercises", "obese", "family_history", "age", "label"});
  std::vector<RiskRecord> out;
  for (std::size_t r = 1; r < t.size(); ++r) {
    const auto& row = t[r];
    if (row.size() != t.front().size())
      throw Error(ErrorCode::Format, "risk CSV row " + std::to_string(r) + " has the wrong column count");
    RiskRecord rec;
    const auto id_it = idx.find("id");
    rec.id = id_it != idx.end() ? row[id_it->second] : "row" + std::to_string(r);
    const std::string ctx = "record " + rec.id;
    auto num = [&](const char* f) { return parse_double(row[idx.at(f)], ctx); };
    auto bin = [&](const char* f) { return parse_binary(row[idx.at(f)], ctx); };
    rec.systolic_bp = num("systolic_bp");
    rec.atrial_fibrillation = bin("atrial_fibrillation");
    rec.smoker = bin("smoker");
    rec.cholesterol = num("cholesterol");
    rec.diabetic = bin("diabetic");
    rec.exercises = bin("exercises");
    rec.obese = bin("obese");
    rec.family_history = bin("family_history");
    rec.age = num("age");
    rec.stroke = parse_label(row[idx.at("label")]);
    validate(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace strokepipe
