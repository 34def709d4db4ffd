#include "kohn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace kohn::io {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

Complex complex_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string(what) + ": expected [t, s]");
  return {j[0].get<double>(), j[1].get<double>()};
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

std::string csv_cell(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_null()) return "nan";
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(where + ": bad number '" + s + "'");
  return x;
}

spectrum::SigmaLabel sigma_from(const json& j, const RunConfig& config) {
  check_keys(j, {"q", "gamma", "lambda"}, "sigma");
  return spectrum::SigmaLabel::make(get_or(j, "q", 1), get_or(j, "gamma", 1.0), get_or(j, "lambda", 0.0), config.nu,
                                    config.n);
}

std::vector<double> doubles(const json& j, const char* key, std::vector<double> fallback) {
  return get_or(j, key, fallback);
}

const json& section(const RunConfig& config, const std::string& name) {
  static const json empty = json::object();
  auto it = config.experiments.find(name);
  return it == config.experiments.end() ? empty : *it;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) { write_text_atomic(path, value.dump(2) + "\n"); }

std::string content_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- domains

geo::DomainSpec domain_from_json(const json& j) {
  check_keys(j, {"schema", "vertices", "disc", "nu", "delta"}, "domain");
  const double nu = get_or(j, "nu", 0.0);
  std::optional<double> delta;
  if (j.contains("delta")) delta = get_or(j, "delta", 0.0);
  try {
    if (j.contains("disc")) {
      const json& d = j.at("disc");
      check_keys(d, {"center", "radius", "segments"}, "domain.disc");
      return geo::DomainSpec::disc(complex_from(d.at("center"), "domain.disc.center"), get_or(d, "radius", 1.0), nu,
                                   get_or(d, "segments", 256), delta);
    }
    if (!j.contains("vertices")) throw ConfigError("domain needs 'vertices' or 'disc'");
    std::vector<geo::HalfPlanePoint> v;
    for (const auto& p : j.at("vertices")) {
      Complex w = complex_from(p, "domain.vertices");
      v.emplace_back(w.real(), w.imag());
    }
    return geo::DomainSpec::from_vertices(std::move(v), nu, delta);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

json domain_to_json(const geo::DomainSpec& domain) {
  json v = json::array();
  for (const auto& p : domain.boundary()) v.push_back(json::array({p.t(), p.s()}));
  return {{"schema", kDomainSchema}, {"nu", domain.nu()}, {"delta", domain.delta()}, {"vertices", v}};
}

// ---------------------------------------------------------------- spectra

json spectrum_to_json(const spectrum::SpectralComplex& complex) {
  json blocks = json::array();
  for (const auto& b : complex.blocks()) {
    json ds = json::array();
    for (const auto& d : b.D) {
      json re = json::array(), im = json::array();
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        json rr = json::array(), ii = json::array();
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
          rr.push_back(d(r, c).real());
          ii.push_back(d(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
      }
      ds.push_back({{"rows", d.rows()}, {"cols", d.cols()}, {"re", re}, {"im", im}});
    }
    blocks.push_back({{"lambda", b.lambda}, {"dims", b.dims}, {"D", ds}});
  }
  return {{"schema", kSpectrumSchema}, {"n", complex.n()}, {"nu", complex.nu()}, {"blocks", blocks}};
}

spectrum::SpectralComplex spectrum_from_json(const json& j) {
  check_keys(j, {"schema", "n", "nu", "blocks", "labels", "meta"}, "spectrum");
  try {
    std::vector<spectrum::LambdaBlock> blocks;
    for (const auto& jb : j.at("blocks")) {
      check_keys(jb, {"lambda", "dims", "D"}, "spectrum.blocks[]");
      spectrum::LambdaBlock b;
      b.lambda = jb.at("lambda").get<double>();
      b.dims = jb.at("dims").get<std::vector<int>>();
      const json& ds = jb.at("D");
      if (ds.size() + 1 != b.dims.size()) throw ConfigError("spectrum block needs one differential per level gap");
      for (std::size_t q = 0; q < ds.size(); ++q) {
        const json& jd = ds[q];
        const int rows = jd.at("rows").get<int>(), cols = jd.at("cols").get<int>();
        if (rows != b.dims[q + 1] || cols != b.dims[q]) throw ConfigError("differential shape does not match dims");
        MatrixXc d(rows, cols);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) d(r, c) = {jd.at("re").at(r).at(c).get<double>(), jd.at("im").at(r).at(c).get<double>()};
        b.D.push_back(std::move(d));
      }
      blocks.push_back(std::move(b));
    }
    return spectrum::SpectralComplex(j.at("n").get<int>(), get_or(j, "nu", 0.0), std::move(blocks));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spectrum: ") + e.what());
  }
}

std::string spectrum_id(const spectrum::SpectralComplex& complex) {
  return content_hash(spectrum_to_json(complex).dump());
}

LabelSet labels_from_json(const json& j) {
  if (j.contains("blocks")) {
    auto complex = spectrum_from_json(j);
    return {complex.all_labels(), complex.meta()};
  }
  check_keys(j, {"schema", "meta", "labels"}, "labels");
  LabelSet set;
  try {
    const json& m = j.at("meta");
    check_keys(m, {"n", "nu", "gamma0", "c_growth", "min_separation"}, "labels.meta");
    set.meta.n = get_or(m, "n", 4);
    set.meta.gamma0 = get_or(m, "gamma0", 1.0);
    set.meta.c_growth = get_or(m, "c_growth", 1.0);
    set.meta.min_separation = get_or(m, "min_separation", 1e-6);
    const double nu = get_or(m, "nu", 0.0);
    int index = 0;
    for (const auto& jl : j.at("labels")) {
      check_keys(jl, {"id", "q", "gamma", "lambda", "gamma_bar", "nu"}, "labels[]");
      auto l = spectrum::SigmaLabel::make(jl.at("q").get<int>(), jl.at("gamma").get<double>(),
                                          jl.at("lambda").get<double>(), get_or(jl, "nu", nu), set.meta.n,
                                          {-1, jl.at("q").get<int>(), index++});
      if (jl.contains("gamma_bar")) l.gamma_bar = jl.at("gamma_bar").get<double>();
      set.labels.push_back(l);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("labels: ") + e.what());
  }
  return set;
}

json labels_to_json(const std::vector<spectrum::SigmaLabel>& labels, const spectrum::SpectrumMeta& meta) {
  json arr = json::array();
  for (const auto& l : labels) {
    json e = {{"id", l.id()}, {"q", l.q}, {"gamma", l.gamma}, {"lambda", l.lambda}, {"nu", l.nu}};
    if (l.gamma_bar) e["gamma_bar"] = *l.gamma_bar;
    arr.push_back(e);
  }
  return {{"schema", kLabelsSchema},
          {"meta", {{"n", meta.n}, {"gamma0", meta.gamma0}, {"c_growth", meta.c_growth}, {"min_separation", meta.min_separation}}},
          {"labels", arr}};
}

json validation_to_json(const spectrum::ValidationReport& report) {
  json v = json::array();
  for (const auto& x : report.violations)
    v.push_back({{"constraint", x.constraint}, {"label", x.label}, {"detail", x.detail}});
  return {{"pass", report.pass}, {"violations", v}};
}

std::shared_ptr<const spectrum::SpectralComplex> spectrum_from_source(const json& source, const fs::path& base) {
  if (source.is_string()) return std::make_shared<const spectrum::SpectralComplex>(
      spectrum_from_json(read_json(resolve(source.get<std::string>(), base))));
  if (!source.is_object()) throw ConfigError("spectrum: expected a path or an object");
  if (source.contains("stub")) {
    const json& s = source.at("stub");
    check_keys(s, {"n", "cap", "nu"}, "spectrum.stub");
    return std::make_shared<const spectrum::SpectralComplex>(
        spectrum::sphere_stub_spectrum(get_or(s, "n", 4), get_or(s, "cap", 2), get_or(s, "nu", 0.0)).complex);
  }
  if (source.contains("synth")) {
    const json& s = source.at("synth");
    check_keys(s, {"n", "dims", "lambdas", "seed", "nu", "ranks"}, "spectrum.synth");
    std::optional<std::vector<int>> ranks;
    if (s.contains("ranks")) ranks = get_or(s, "ranks", std::vector<int>{});
    return std::make_shared<const spectrum::SpectralComplex>(spectrum::synth_complex(
        get_or(s, "n", 4), get_or(s, "dims", std::vector<int>{2, 3, 3, 2}), get_or(s, "lambdas", std::vector<double>{0.0}),
        get_or<std::uint64_t>(s, "seed", 1), get_or(s, "nu", 0.0), ranks));
  }
  return std::make_shared<const spectrum::SpectralComplex>(spectrum_from_json(source));
}

// ---------------------------------------------------------------- meshes and fields

namespace {

std::string nodes_csv(const fem::Mesh& mesh) {
  std::string out = "id,t,s,boundary\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.nodes[static_cast<std::size_t>(i)];
    out += std::to_string(i) + ',' + format_double(p[0]) + ',' + format_double(p[1]) + ',' +
           (mesh.boundary[static_cast<std::size_t>(i)] ? "1" : "0") + '\n';
  }
  return out;
}

std::string triangles_csv(const fem::Mesh& mesh) {
  std::string out = "id,a,b,c\n";
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles[static_cast<std::size_t>(e)];
    out += std::to_string(e) + ',' + std::to_string(t[0]) + ',' + std::to_string(t[1]) + ',' + std::to_string(t[2]) + '\n';
  }
  return out;
}

}  // namespace

void write_mesh(const fem::Mesh& mesh, const fs::path& dir) {
  write_text_atomic(dir / "nodes.csv", nodes_csv(mesh));
  write_text_atomic(dir / "triangles.csv", triangles_csv(mesh));
  json meta = {{"mesh_id", mesh_id(mesh)},
               {"h", mesh.h},
               {"nodes", mesh.num_nodes()},
               {"triangles", mesh.num_triangles()},
               {"boundary_nodes", mesh.num_boundary()}};
  write_json(dir / "mesh.json", meta);
}

std::string mesh_id(const fem::Mesh& mesh) { return content_hash(nodes_csv(mesh) + triangles_csv(mesh)); }

std::string field_csv(const fem::CoefficientField& field) {
  const auto& mesh = field.space->mesh();
  std::string out = "node,t,s,re,im\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.nodes[static_cast<std::size_t>(i)];
    const Complex v = field.values(i);
    out += std::to_string(i) + ',' + format_double(p[0]) + ',' + format_double(p[1]) + ',' + format_double(v.real()) +
           ',' + format_double(v.imag()) + '\n';
  }
  return out;
}

fem::CoefficientField field_from_csv(const std::string& text, const fem::SpacePtr& space) {
  auto field = fem::CoefficientField::zero(space);
  const auto& mesh = space->mesh();
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("node,t,s,re,im", 0) != 0) throw ConfigError("field CSV: bad header");
  int count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 5) throw ConfigError("field CSV: expected 5 columns");
    const int node = static_cast<int>(parse_double(cells[0], "field CSV node"));
    if (node < 0 || node >= mesh.num_nodes()) throw ConfigError("field CSV: node id out of range");
    const auto& p = mesh.nodes[static_cast<std::size_t>(node)];
    if (std::abs(parse_double(cells[1], "field CSV t") - p[0]) > 1e-12 ||
        std::abs(parse_double(cells[2], "field CSV s") - p[1]) > 1e-12)
      throw ConfigError("field CSV: node coordinates do not match the mesh");
    field.values(node) = {parse_double(cells[3], "field CSV re"), parse_double(cells[4], "field CSV im")};
    ++count;
  }
  if (count != mesh.num_nodes()) throw ConfigError("field CSV: node count does not match the mesh");
  return field;
}

std::string constants_csv(const solver::ConstantsTable& table) {
  std::string out = "sigma_id,gamma,lambda,ratio\n";
  for (const auto& r : table.rows)
    out += r.sigma_id + ',' + format_double(r.gamma) + ',' + format_double(r.lambda) + ',' + format_double(r.ratio) + '\n';
  return out;
}

experiments::Table slot_constants_table(const std::vector<forms::SlotConstant>& constants) {
  experiments::Table t{"constants", {"sigma_id", "part", "gamma", "lambda", "ratio"}, {},
                       experiments::PlotSpec{"lambda", {"ratio"}, "part", "point"}};
  for (const auto& c : constants) t.rows.push_back({c.sigma_id, c.part, c.gamma, c.lambda, c.ratio});
  return t;
}

// ---------------------------------------------------------------- forms

void write_form(const forms::FourierForm& form, const fs::path& dir) {
  const auto& ctx = *form.context;
  json slots = json::array();
  auto emit = [&](const std::map<spectrum::SigmaKey, fem::CoefficientField>& part, const char* name) {
    for (const auto& [key, field] : part) {
      const std::string id = ctx.label(key).id();
      const std::string file = std::string(name) + "_" + id + ".csv";
      write_text_atomic(dir / file, field_csv(field));
      slots.push_back({{"part", name}, {"id", id}, {"block", key.block}, {"q", key.q}, {"index", key.index}, {"file", file}});
    }
  };
  emit(form.top, "top");
  emit(form.bot, "bot");
  json manifest = {{"schema", kFormSchema},
                   {"q", form.q},
                   {"spectrum_id", spectrum_id(ctx.spectrum())},
                   {"mesh_id", mesh_id(ctx.space()->mesh())},
                   {"slots", slots}};
  write_json(dir / "manifest.json", manifest);
}

forms::FourierForm read_form(const forms::ContextPtr& context, const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  check_keys(m, {"schema", "q", "spectrum_id", "mesh_id", "slots"}, "form manifest");
  if (m.value("spectrum_id", "") != spectrum_id(context->spectrum()))
    throw ConfigError("form " + dir.string() + " was written for a different spectrum");
  if (m.value("mesh_id", "") != mesh_id(context->space()->mesh()))
    throw ConfigError("form " + dir.string() + " was written for a different mesh");
  auto form = forms::FourierForm::zero(context, get_or(m, "q", 1));
  for (const auto& s : m.at("slots")) {
    spectrum::SigmaKey key{get_or(s, "block", 0), get_or(s, "q", 0), get_or(s, "index", 0)};
    auto field = field_from_csv(read_text(dir / get_or(s, "file", std::string())), context->space());
    const std::string part = get_or(s, "part", std::string());
    if (part == "top")
      form.top.emplace(key, std::move(field));
    else if (part == "bot")
      form.bot.emplace(key, std::move(field));
    else
      throw ConfigError("form slot part must be 'top' or 'bot'");
  }
  try {
    form.check();
  } catch (const UsageError& e) {
    throw ConfigError(std::string("form ") + dir.string() + ": " + e.what());
  }
  return form;
}

// ---------------------------------------------------------------- reports

std::string table_csv(const experiments::Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_cell(row[c]);
    out += '\n';
  }
  return out;
}

json vega_lite(const experiments::Table& table, const std::string& csv_name) {
  experiments::PlotSpec plot;
  if (table.plot) {
    plot = *table.plot;
  } else {
    plot.x = table.columns.empty() ? "" : table.columns.front();
    for (std::size_t c = 1; c < table.columns.size(); ++c) {
      const bool numeric = !table.rows.empty() && c < table.rows.front().size() && table.rows.front()[c].is_number();
      if (numeric) plot.y.push_back(table.columns[c]);
    }
  }
  auto axis = [](const std::string& field, bool log) {
    json a = {{"field", field}, {"type", "quantitative"}};
    if (log) a["scale"] = {{"type", "log"}};
    return a;
  };
  json spec = {{"$schema", "https://vega.github.io/schema/vega-lite/v5.json"},
               {"title", table.name},
               {"data", {{"url", csv_name}, {"format", {{"type", "csv"}}}}},
               {"mark", {{"type", plot.mark}, {"point", plot.mark == "line"}}}};
  json enc = {{"x", axis(plot.x, plot.log_x)}};
  if (plot.y.size() > 1) {
    spec["transform"] = json::array({{{"fold", plot.y}, {"as", json::array({"series", "value"})}}});
    enc["y"] = axis("value", plot.log_y);
    enc["color"] = {{"field", "series"}, {"type", "nominal"}};
  } else {
    enc["y"] = axis(plot.y.empty() ? "" : plot.y.front(), plot.log_y);
    if (!plot.color.empty()) enc["color"] = {{"field", plot.color}, {"type", "nominal"}};
  }
  spec["encoding"] = enc;
  return spec;
}

json report_to_json(const experiments::ExperimentReport& report) {
  json ms = json::array(), cs = json::array(), ts = json::array();
  for (const auto& m : report.measurements) ms.push_back({{"name", m.name}, {"value", m.value}, {"h", m.h}});
  for (const auto& c : report.checks)
    cs.push_back({{"name", c.name},
                  {"value", c.value},
                  {"relation", c.relation},
                  {"threshold", c.threshold},
                  {"kind", c.kind == experiments::Check::Kind::property ? "property" : "stability"},
                  {"pass", c.pass}});
  for (const auto& t : report.tables)
    ts.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}, {"file", t.name + ".csv"},
                  {"plot", t.name + ".vl.json"}});
  return {{"schema", kReportSchema},
          {"id", report.id},
          {"verdict", experiments::to_string(report.verdict)},
          {"parameters", report.parameters},
          {"measurements", ms},
          {"checks", cs},
          {"tables", ts},
          {"notes", report.notes}};
}

void write_report(const experiments::ExperimentReport& report, const fs::path& dir) {
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + dir.filename().string() + ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);
  for (const auto& t : report.tables) {
    write_text_atomic(staging / (t.name + ".csv"), table_csv(t));
    write_json(staging / (t.name + ".vl.json"), vega_lite(t, t.name + ".csv"));
  }
  write_json(staging / "report.json", report_to_json(report));
  fs::remove_all(dir);
  fs::rename(staging, dir);
}

// ---------------------------------------------------------------- config

solver::KernelMode kernel_mode_from_string(const std::string& name) {
  if (name == "discrete") return solver::KernelMode::discrete;
  if (name == "capped") return solver::KernelMode::capped;
  throw ConfigError("unknown kernel mode '" + name + "' (discrete | capped)");
}

std::string to_string(solver::KernelMode mode) { return mode == solver::KernelMode::discrete ? "discrete" : "capped"; }

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, {"schema", "domain", "spectrum", "mesh", "q", "n", "nu", "solver", "box", "dbar", "experiments", "input",
                 "output", "seed", "threads"},
             "config");
  if (j.contains("schema") && j.at("schema") != kConfigSchema)
    throw ConfigError("config schema must be '" + std::string(kConfigSchema) + "'");
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  c.q = get_or(j, "q", 1);
  c.n = get_or(j, "n", 4);
  c.nu = get_or(j, "nu", 0.0);
  if (j.contains("spectrum")) {
    c.spectrum = spectrum_from_source(j.at("spectrum"), base_dir);
    c.spectrum_given = true;
    if (j.contains("n") && c.n != c.spectrum->n()) throw ConfigError("config n differs from the spectrum's n");
    if (j.contains("nu") && c.nu != c.spectrum->nu()) throw ConfigError("config nu differs from the spectrum's nu");
    c.n = c.spectrum->n();
    c.nu = c.spectrum->nu();
  }
  if (c.n < 3) throw ConfigError("n = " + std::to_string(c.n) + " violates n >= 3");
  if (c.q < 1 || c.q > c.n - 2)
    throw ConfigError("q = " + std::to_string(c.q) + " violates the hypothesis 1 <= q <= n - 2 (n = " +
                      std::to_string(c.n) + ")");
  if (!c.spectrum) c.spectrum = std::make_shared<const spectrum::SpectralComplex>(spectrum::sphere_stub_spectrum(c.n, 2, c.nu).complex);

  if (j.contains("domain")) {
    const json& d = j.at("domain");
    json dj = d.is_string() ? read_json(resolve(d.get<std::string>(), base_dir)) : d;
    if (!dj.contains("nu")) dj["nu"] = c.nu;
    c.domain = domain_from_json(dj);
    if (c.domain.nu() != c.nu) throw ConfigError("domain nu differs from the spectrum's nu");
    c.domain_given = true;
  } else {
    c.domain = experiments::default_disc(c.nu);
  }

  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    check_keys(m, {"h", "levels"}, "mesh");
    c.h = get_or(m, "h", c.h);
    c.h_levels = get_or(m, "levels", std::vector<double>{});
  }
  if (!(c.h > 0.0)) throw ConfigError("mesh.h must be positive");

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"method", "tol", "max_iter"}, "solver");
    const std::string method = get_or(s, "method", std::string("direct"));
    if (method == "direct")
      c.solver.method = solver::SolverOptions::Method::direct;
    else if (method == "cg")
      c.solver.method = solver::SolverOptions::Method::cg;
    else
      throw ConfigError("solver.method must be 'direct' or 'cg'");
    c.solver.tol = get_or(s, "tol", c.solver.tol);
    c.solver.max_iter = get_or(s, "max_iter", c.solver.max_iter);
  }
  if (j.contains("box")) {
    const json& b = j.at("box");
    check_keys(b, {"mode", "kernel", "degree_cap", "residual_tol"}, "box");
    c.box.mode = forms::box_mode_from_string(get_or(b, "mode", std::string("plus_one")));
    c.box.kernel = kernel_mode_from_string(get_or(b, "kernel", std::string("discrete")));
    c.box.degree_cap = get_or(b, "degree_cap", c.box.degree_cap);
    c.box_residual_tol = get_or(b, "residual_tol", c.box_residual_tol);
  }
  if (j.contains("dbar")) {
    const json& d = j.at("dbar");
    check_keys(d, {"precondition_tol", "residual_tol"}, "dbar");
    c.dbar.precondition_tol = get_or(d, "precondition_tol", c.dbar.precondition_tol);
    c.dbar.residual_tol = get_or(d, "residual_tol", c.dbar.residual_tol);
  }
  if (j.contains("experiments")) {
    c.experiments = j.at("experiments");
    if (!c.experiments.is_object()) throw ConfigError("experiments must be an object");
    for (auto it = c.experiments.begin(); it != c.experiments.end(); ++it) {
      if (it.key() == "run") continue;
      const auto& names = experiments::experiment_names();
      if (std::find(names.begin(), names.end(), it.key()) == names.end())
        throw ConfigError("experiments: unknown experiment '" + it.key() + "'");
    }
    c.run = get_or(c.experiments, "run", std::vector<std::string>{});
  }
  if (j.contains("input")) c.input = resolve(get_or(j, "input", std::string()), base_dir);
  if (j.contains("output")) c.output = resolve(get_or(j, "output", std::string("out")), base_dir);
  c.seed = get_or<std::uint64_t>(j, "seed", 1);
  c.threads = threads_from_env(std::max(1, get_or(j, "threads", 1)));
  return c;
}

RunConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

forms::ContextPtr make_context(const RunConfig& config) {
  return std::make_shared<const forms::Context>(config.spectrum, config.domain, fem::make_space(config.domain, config.h),
                                                config.threads);
}

// ---------------------------------------------------------------- experiment options

experiments::NoncompactOptions noncompact_options(const RunConfig& config) {
  const json& j = section(config, "noncompact");
  check_keys(j, {"sigma", "K", "w0", "eps", "h_levels", "eigen_tol", "stability_tol"}, "experiments.noncompact");
  experiments::NoncompactOptions o;
  if (config.domain_given) o.domain = config.domain;
  o.sigma = spectrum::SigmaLabel::make(o.sigma.q, o.sigma.gamma, o.sigma.lambda, config.nu, config.n);
  if (j.contains("sigma")) o.sigma = sigma_from(j.at("sigma"), config);
  o.K = get_or(j, "K", o.K);
  if (j.contains("w0")) o.w0 = complex_from(j.at("w0"), "noncompact.w0");
  o.eps = get_or(j, "eps", o.eps);
  o.h_levels = doubles(j, "h_levels", o.h_levels);
  o.eigen_tol = get_or(j, "eigen_tol", o.eigen_tol);
  o.stability_tol = get_or(j, "stability_tol", o.stability_tol);
  return o;
}

experiments::NegRegOptions negreg_options(const RunConfig& config) {
  const json& j = section(config, "negreg");
  check_keys(j, {"sigma", "center", "radius", "z0", "eps_list", "h", "wbar_tol", "eigen_tol", "growth_fraction"},
             "experiments.negreg");
  experiments::NegRegOptions o;
  o.sigma = spectrum::SigmaLabel::make(o.sigma.q, o.sigma.gamma, o.sigma.lambda, config.nu, config.n);
  if (j.contains("sigma")) o.sigma = sigma_from(j.at("sigma"), config);
  if (j.contains("center")) o.center = complex_from(j.at("center"), "negreg.center");
  o.radius = get_or(j, "radius", o.radius);
  if (j.contains("z0")) o.z0 = complex_from(j.at("z0"), "negreg.z0");
  o.eps_list = doubles(j, "eps_list", o.eps_list);
  o.h = get_or(j, "h", o.h);
  o.wbar_tol = get_or(j, "wbar_tol", o.wbar_tol);
  o.eigen_tol = get_or(j, "eigen_tol", o.eigen_tol);
  o.growth_fraction = get_or(j, "growth_fraction", o.growth_fraction);
  return o;
}

experiments::DiscOptions disc_options(const RunConfig& config) {
  const json& j = section(config, "disc");
  check_keys(j, {"alpha", "J", "eps", "min_drop"}, "experiments.disc");
  experiments::DiscOptions o;
  o.alpha = get_or(j, "alpha", o.alpha);
  o.J = get_or(j, "J", o.J);
  o.eps = get_or(j, "eps", o.eps);
  o.min_drop = get_or(j, "min_drop", o.min_drop);
  return o;
}

experiments::HypoOptions hypo_options(const RunConfig& config) {
  const json& j = section(config, "hypo");
  check_keys(j, {"with", "without", "caps", "h", "log_levels", "kernel_tol"}, "experiments.hypo");
  experiments::HypoOptions o;
  o.q = config.q;
  if (j.contains("with")) o.with_cohomology = spectrum_from_source(j.at("with"), config.base_dir);
  if (j.contains("without")) o.without = spectrum_from_source(j.at("without"), config.base_dir);
  o.caps = get_or(j, "caps", o.caps);
  o.h = get_or(j, "h", o.h);
  o.log_levels = doubles(j, "log_levels", o.log_levels);
  o.kernel_tol = get_or(j, "kernel_tol", o.kernel_tol);
  if (config.domain_given) o.domain = config.domain;
  o.threads = config.threads;
  return o;
}

experiments::SweepOptions sweep_options(const RunConfig& config) {
  const json& j = section(config, "sweep");
  check_keys(j, {"kind", "spectrum", "sample", "h_levels", "test_fields", "shift_delta", "tol"}, "experiments.sweep");
  experiments::SweepOptions o;
  o.kind = solver::estimate_kind_from_string(get_or(j, "kind", std::string("basic")));
  std::shared_ptr<const spectrum::SpectralComplex> source;
  if (j.contains("spectrum"))
    source = spectrum_from_source(j.at("spectrum"), config.base_dir);
  else if (config.spectrum_given)
    source = config.spectrum;
  if (source)
    for (const auto& l : source->all_labels())
      if (l.q <= source->n() - 2) o.labels.push_back(l);
  o.sample = get_or(j, "sample", o.sample);
  o.h_levels = doubles(j, "h_levels", o.h_levels);
  o.estimate.test_fields = get_or(j, "test_fields", o.estimate.test_fields);
  o.estimate.shift_delta = get_or(j, "shift_delta", o.estimate.shift_delta);
  o.estimate.seed = config.seed;
  o.estimate.threads = config.threads;
  o.tol = get_or(j, "tol", o.tol);
  if (config.domain_given) o.domain = config.domain;
  return o;
}

experiments::ConvergeOptions converge_options(const RunConfig& config) {
  const json& j = section(config, "converge");
  check_keys(j, {"sigma", "center", "radius", "h_levels", "rate_lo", "rate_hi"}, "experiments.converge");
  experiments::ConvergeOptions o;
  o.sigma = spectrum::SigmaLabel::make(o.sigma.q, o.sigma.gamma, o.sigma.lambda, config.nu, config.n);
  if (j.contains("sigma")) o.sigma = sigma_from(j.at("sigma"), config);
  if (j.contains("center")) o.center = complex_from(j.at("center"), "converge.center");
  o.radius = get_or(j, "radius", o.radius);
  o.h_levels = doubles(j, "h_levels", o.h_levels);
  o.rate_lo = get_or(j, "rate_lo", o.rate_lo);
  o.rate_hi = get_or(j, "rate_hi", o.rate_hi);
  return o;
}

experiments::ExperimentReport run_experiment(const std::string& name, const RunConfig& config) {
  if (name == "noncompact") return experiments::run_noncompactness(noncompact_options(config));
  if (name == "negreg") return experiments::run_negregularity(negreg_options(config));
  if (name == "disc") return experiments::run_disc_nonsurjectivity(disc_options(config));
  if (name == "hypo") return experiments::run_hypoellipticity(hypo_options(config));
  if (name == "sweep") return experiments::run_estimate_sweep(sweep_options(config));
  if (name == "converge") return experiments::run_convergence(converge_options(config));
  throw ConfigError("unknown experiment '" + name + "' (noncompact | negreg | disc | hypo | sweep | converge)");
}

}  // namespace kohn::io
