// carnot-kit: command line front end for the carnot_core library.
//
// Exit codes: 0 success, 2 input error, 3 numerical diagnostic,
// 64 unknown subcommand, 74 write failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "carnot/algebra.hpp"
#include "carnot/group.hpp"
#include "carnot/heisenberg.hpp"
#include "carnot/io.hpp"
#include "carnot/metric.hpp"
#include "carnot/pansu.hpp"
#include "carnot/rng.hpp"

namespace {

using namespace carnot;

constexpr const char* kVersion = "carnot-kit 0.1.0";

struct CommonArgs {
  std::string algebra_path;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::string out_dir;
};

Vec parse_vec(const std::string& text) {
  std::vector<double> vals;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      if (!cur.empty()) vals.push_back(std::stod(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  Vec v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    v[static_cast<int>(i)] = vals[i];
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  Vec v = parse_vec(text);
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::string vec_to_csv(const Vec& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += double_to_string(v[i]);
  }
  return out;
}

CarnotStructure load_carnot(const CommonArgs& args) {
  if (args.algebra_path.empty())
    throw InputError("an algebra file is required (--algebra)");
  return make_carnot(read_algebra_file(args.algebra_path));
}

struct OutputSink {
  CommonArgs args;
  std::string subcommand;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();

  bool has_dir() const { return !args.out_dir.empty(); }

  void write(const std::string& filename, const std::string& content) const {
    if (!has_dir()) return;
    std::filesystem::create_directories(args.out_dir);
    std::string path = args.out_dir + "/" + filename;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << content;
    if (!f) throw IoError("write failed for " + path);
  }

  void finish() const {
    if (!has_dir()) return;
    RunManifest m;
    m.subcommand = subcommand;
    if (!args.algebra_path.empty()) m.inputs.push_back(args.algebra_path);
    m.seed = args.seed;
    m.tolerance = args.tol;
    m.tool_version = kVersion;
    m.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    std::filesystem::create_directories(args.out_dir);
    write_manifest(args.out_dir + "/manifest.json", m);
  }
};

// --- builtin Hamiltonian and map specs ---------------------------------------

HamiltonianSpec parse_hamiltonian(const std::string& text) {
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::vector<double> ps =
      colon == std::string::npos ? std::vector<double>{}
                                 : parse_list(text.substr(colon + 1));
  if (kind == "quadratic") {
    if (ps.size() != 3)
      throw InputError("quadratic bump wants r0,R,amplitude");
    return quadratic_bump(ps[0], ps[1], ps[2]);
  }
  if (kind == "poly") {
    if (ps.size() != 4) throw InputError("poly bump wants R,amp,cx,cy");
    Vec c(2);
    c << ps[2], ps[3];
    return poly_bump(ps[0], ps[1], c);
  }
  throw InputError("unknown Hamiltonian spec '" + text +
                   "' (use quadratic:r0,R,amp or poly:R,amp,cx,cy)");
}

PlanarMap parse_planar_map(const std::string& text, int steps) {
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "identity") return [](const Vec& x) { return x; };
  if (kind == "linear" || kind == "diag") {
    std::vector<double> ps = parse_list(rest);
    Mat a(2, 2);
    if (kind == "diag") {
      if (ps.size() != 2) throw InputError("diag wants a,b");
      a << ps[0], 0, 0, ps[1];
    } else {
      if (ps.size() != 4) throw InputError("linear wants a,b,c,d (row major)");
      a << ps[0], ps[1], ps[2], ps[3];
    }
    return [a](const Vec& x) { return Vec(a * x); };
  }
  if (kind == "rotation") {
    double th = std::stod(rest);
    Mat a(2, 2);
    a << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    return [a](const Vec& x) { return Vec(a * x); };
  }
  if (kind == "shear") {
    double k = std::stod(rest);
    return [k](const Vec& x) {
      Vec y(2);
      y << x[0], x[1] + k * std::sin(x[0]);
      return y;
    };
  }
  if (kind == "hamflow") {
    HamiltonianSpec spec = parse_hamiltonian(rest);
    return flow_time_map(spec, 1.0, steps);
  }
  throw InputError("unknown map spec '" + text + "'");
}

// --- subcommand bodies --------------------------------------------------------

int cmd_validate(const CommonArgs& args) {
  LieAlgebraSpec spec = read_algebra_file(args.algebra_path);
  ValidationReport rep = validate_algebra(spec);
  std::printf("algebra %s: antisymmetry residual %g, jacobi residual %g -> %s\n",
              spec.name.empty() ? args.algebra_path.c_str() : spec.name.c_str(),
              rep.antisymmetry_residual, rep.jacobi_residual,
              rep.passed ? "pass" : "FAIL");
  return rep.passed ? 0 : 3;
}

int cmd_nilpotentize(const CommonArgs& args) {
  OutputSink sink{args, "nilpotentize"};
  LieAlgebraSpec spec = read_algebra_file(args.algebra_path);
  CarnotStructure cs = make_carnot(spec);
  auto dims = cs.layer_dims();
  std::printf("step %d, layer dims (", cs.step());
  for (std::size_t i = 0; i < dims.size(); ++i)
    std::printf("%s%d", i ? ", " : "", dims[i]);
  std::printf("), homogeneous dimension Q = %d\n",
              cs.homogeneous_dimension());
  Table table;
  table.header = {"i", "j", "k", "c"};
  for (const auto& e : cs.nilpotent().entries()) {
    std::printf("[X%d, X%d]_N = %s X%d\n", e.i + 1, e.j + 1,
                double_to_string(e.c).c_str(), e.k + 1);
    table.rows.push_back({static_cast<double>(e.i), static_cast<double>(e.j),
                          static_cast<double>(e.k), e.c});
  }
  sink.write("nilpotent_brackets.csv", table_to_csv(table));
  sink.finish();
  return 0;
}

int cmd_mul(const CommonArgs& args, const std::string& xs,
            const std::string& ys) {
  OutputSink sink{args, "mul"};
  CarnotStructure cs = load_carnot(args);
  Vec x = parse_vec(xs), y = parse_vec(ys);
  if (x.size() != cs.dim() || y.size() != cs.dim())
    throw InputError("point dimension does not match the algebra");
  Vec p = bch_multiply(cs, x, y);
  std::printf("%s\n", vec_to_csv(p).c_str());
  Table t;
  t.header = {"component", "value"};
  for (int i = 0; i < p.size(); ++i)
    t.rows.push_back({static_cast<double>(i), p[i]});
  sink.write("product.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_norm(const CommonArgs& args, const std::string& xs,
             const std::string& kind) {
  CarnotStructure cs = load_carnot(args);
  Vec x = parse_vec(xs);
  NormKind k = kind == "inf" ? NormKind::Inf : NormKind::One;
  std::printf("%s\n", double_to_string(homogeneous_norm(cs, x, k)).c_str());
  return 0;
}

int cmd_ccdist(const CommonArgs& args, const std::string& xs,
               const std::string& ys, int segments, int budget, int starts) {
  OutputSink sink{args, "ccdist"};
  CarnotStructure cs = load_carnot(args);
  CcOptions opt;
  opt.n_segments = segments;
  opt.budget = budget;
  opt.starts = starts;
  opt.seed = args.seed;
  auto res = cc_distance_upper(cs, parse_vec(xs), parse_vec(ys), opt);
  std::printf("upper_bound %s (endpoint residual %g, %s)\n",
              double_to_string(res.upper_bound).c_str(),
              res.endpoint_residual,
              res.certified ? "certified" : "NOT certified");
  Table t;
  t.header = {"segment", "duration"};
  for (int c = 0; c < cs.dim(); ++c) t.header.push_back("u_" + std::to_string(c + 1));
  for (std::size_t k = 0; k < res.path.controls.size(); ++k) {
    std::vector<double> row = {static_cast<double>(k), res.path.durations[k]};
    for (int c = 0; c < cs.dim(); ++c) row.push_back(res.path.controls[k][c]);
    t.rows.push_back(row);
  }
  sink.write("path.csv", table_to_csv(t));
  sink.finish();
  return res.certified ? 0 : 3;
}

int cmd_hausdim(const CommonArgs& args, int n_scales,
                const std::string& scale_list, std::size_t samples) {
  OutputSink sink{args, "hausdim"};
  CarnotStructure cs = load_carnot(args);
  std::vector<double> scales;
  if (!scale_list.empty()) {
    scales = parse_list(scale_list);
  } else {
    // log-spaced over one decade
    for (int i = 0; i < n_scales; ++i)
      scales.push_back(1.0 * std::pow(0.1, static_cast<double>(i) /
                                              (n_scales - 1)));
  }
  auto res = hausdorff_dimension_estimate(cs, unit_box_sampler(cs), scales,
                                          samples, args.seed);
  std::printf("hausdorff dimension %.3f +- %.3f (Q = %d)\n", res.dimension,
              res.ci_halfwidth, cs.homogeneous_dimension());
  Table t;
  t.header = {"scale", "count"};
  for (std::size_t i = 0; i < res.scales.size(); ++i)
    t.rows.push_back({res.scales[i], static_cast<double>(res.counts[i])});
  sink.write("packing.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_factorize(const CommonArgs& args, const std::string& xs,
                  double radius) {
  OutputSink sink{args, "factorize"};
  CarnotStructure cs = load_carnot(args);
  WordOptions opt;
  opt.chart_radius = radius;
  auto word = word_factorization(cs, parse_vec(xs), opt);
  std::printf("%zu letters, reproduction error %g, max |t| = %s\n",
              word.letters.size(), word.reproduction_error,
              double_to_string(word.max_t).c_str());
  Table t;
  t.header = {"t", "generator"};
  for (const auto& l : word.letters)
    t.rows.push_back({l.t, static_cast<double>(l.generator)});
  sink.write("letters.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_pansu(const CommonArgs& args, const std::string& map_spec,
              const std::string& xs, const std::string& ladder) {
  OutputSink sink{args, "pansu"};
  CarnotStructure cs = load_carnot(args);
  Vec x = parse_vec(xs);

  auto colon = map_spec.find(':');
  std::string kind = map_spec.substr(0, colon);
  std::string rest =
      colon == std::string::npos ? "" : map_spec.substr(colon + 1);
  GroupMap f;
  if (kind == "left") {
    Vec a = parse_vec(rest);
    f = [&cs, a](const Vec& z) { return bch_multiply(cs, a, z); };
  } else if (kind == "right") {
    Vec a = parse_vec(rest);
    f = [&cs, a](const Vec& z) { return bch_multiply(cs, z, a); };
  } else if (kind == "dilate") {
    double lam = std::stod(rest);
    f = [&cs, lam](const Vec& z) { return cs.dilate(lam, z); };
  } else {
    throw InputError("unknown map spec '" + map_spec +
                     "' (use left:..., right:..., dilate:lambda)");
  }

  std::vector<double> eps =
      ladder.empty() ? std::vector<double>{0.4, 0.2, 0.1, 0.05}
                     : parse_list(ladder);
  auto rep = pansu_derivative_estimate(cs, f, x, eps,
                                       default_probe_set(cs, args.seed));
  const char* klass =
      rep.divergent
          ? "DIVERGENT"
          : (classify_linear(cs, rep.candidate, args.tol) == LinearClass::HL
                 ? "HL"
                 : (classify_linear(cs, rep.candidate, args.tol) ==
                            LinearClass::EndOnly
                        ? "EndOnly"
                        : "NotLinear"));
  std::printf("classification %s; morphism residual %g, dilation residual %g\n",
              klass, rep.candidate.morphism_residual,
              rep.candidate.dilation_residual);
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    std::printf("  eps %-8g sup-discrepancy %g\n", rep.eps[i],
                rep.sup_discrepancy[i]);
  Table t;
  t.header = {"row", "col", "value"};
  for (int i = 0; i < cs.dim(); ++i)
    for (int j = 0; j < cs.dim(); ++j)
      t.rows.push_back({static_cast<double>(i), static_cast<double>(j),
                        rep.candidate.matrix(i, j)});
  sink.write("derivative.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

SampledCurve load_curve(const std::string& path) {
  CurveData data = read_curve_csv(path);
  SampledCurve c;
  c.times = data.times;
  c.points = data.points;
  return c;
}

std::string curve_csv(const SampledCurve& c) {
  CurveData data;
  data.times = c.times;
  data.points = c.points;
  return curve_to_csv(data);
}

int cmd_curve_op(const CommonArgs& args, const std::string& which,
                 const std::string& curve_path, int iarea_order) {
  OutputSink sink{args, which};
  CarnotStructure cs = load_carnot(args);
  SampledCurve in = load_curve(curve_path);
  SampledCurve out;
  if (which == "develop")
    out = develop_curve(cs, in);
  else if (which == "lift")
    out = lift_curve(cs, in);
  else
    out = i_area(cs, in, iarea_order);
  std::string csv = curve_csv(out);
  if (sink.has_dir()) {
    sink.write(which + ".csv", csv);
    std::printf("%s: %zu samples -> %s/%s.csv\n", which.c_str(),
                out.points.size(), args.out_dir.c_str(), which.c_str());
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  sink.finish();
  return 0;
}

int cmd_hlift(const CommonArgs& args, const std::string& curve_path,
              double xbar0) {
  OutputSink sink{args, "hlift"};
  SampledCurve planar = load_curve(curve_path);
  SampledCurve lifted = lift_planar_curve(planar, xbar0);
  std::string csv = curve_csv(lifted);
  if (sink.has_dir()) {
    sink.write("hlift.csv", csv);
    std::printf("lift written to %s/hlift.csv\n", args.out_dir.c_str());
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  sink.finish();
  return 0;
}

int cmd_symplift(const CommonArgs& args, const std::string& map_spec,
                 double a, int grid, int steps) {
  OutputSink sink{args, "symplift"};
  PlanarMap phi = parse_planar_map(map_spec, steps);
  LiftOptions opt;
  opt.loop_tol = args.tol;
  LiftedMap lift = lift_symplectomorphism(phi, a, Vec::Zero(2), opt);
  std::printf("loop residual %g, offset a = %s\n", lift.loop_residual,
              double_to_string(a).c_str());
  Table t;
  t.header = {"x_1", "x_2", "F"};
  for (int ix = 0; ix < grid; ++ix)
    for (int iy = 0; iy < grid; ++iy) {
      Vec x(2);
      x << -2.0 + 4.0 * (ix + 0.5) / grid, -2.0 + 4.0 * (iy + 0.5) / grid;
      t.rows.push_back({x[0], x[1], lift.F(x)});
    }
  sink.write("lift.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_hamflow(const CommonArgs& args, const std::string& ham,
                const std::string& x0s, double T, int steps) {
  OutputSink sink{args, "hamflow"};
  HamiltonianSpec spec = parse_hamiltonian(ham);
  Vec x0 = parse_vec(x0s);
  FlowResult flow = hamiltonian_flow(spec, x0, T, steps);
  std::printf("energy drift %g over T = %s\n", flow.energy_drift,
              double_to_string(T).c_str());
  std::string csv = curve_csv(flow.trajectory);
  if (sink.has_dir())
    sink.write("trajectory.csv", csv);
  else
    std::fputs(csv.c_str(), stdout);
  sink.finish();
  return 0;
}

int cmd_hofer_check(const CommonArgs& args, const std::string& ham,
                    double scale, double a_radius, int steps) {
  OutputSink sink{args, "hofer-check"};
  HamiltonianSpec spec = scale_hamiltonian(parse_hamiltonian(ham), scale);
  HoferOptions opt;
  opt.A_radius = a_radius;
  opt.flow_steps = steps;
  opt.seed = args.seed;
  auto res = hofer_lower_bound_check(spec, opt);
  std::printf(
      "C = %s +- %s, V = %s, lhs = %s, rhs = %s -> %s\n",
      double_to_string(res.C).c_str(), double_to_string(res.C_se).c_str(),
      double_to_string(res.V).c_str(), double_to_string(res.lhs).c_str(),
      double_to_string(res.rhs).c_str(), res.pass ? "pass" : "FAIL");
  Table t;
  t.header = {"C", "C_se", "V", "lhs", "rhs", "pass"};
  t.rows.push_back(
      {res.C, res.C_se, res.V, res.lhs, res.rhs, res.pass ? 1.0 : 0.0});
  sink.write("hofer.csv", table_to_csv(t));
  sink.finish();
  return res.pass ? 0 : 3;
}

int cmd_var(const CommonArgs& args, const std::string& curve_path) {
  (void)args;
  SampledCurve c = load_curve(curve_path);
  MetricCurve mc;
  mc.times = c.times;
  mc.points = c.points;
  std::printf("%s\n", double_to_string(variation(mc)).c_str());
  return 0;
}

int cmd_hmeas(const CommonArgs& args, const std::string& cloud_path, double k,
              const std::string& deltas) {
  OutputSink sink{args, "hmeas"};
  Table cloud = read_table_csv(cloud_path);
  std::vector<Vec> pts;
  for (const auto& row : cloud.rows) {
    Vec p(static_cast<int>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) p[static_cast<int>(i)] = row[i];
    pts.push_back(p);
  }
  auto res =
      hausdorff_measure_estimate(pts, euclidean_metric(), k, parse_list(deltas));
  std::printf("H^%s estimate %s (%s)\n", double_to_string(k).c_str(),
              double_to_string(res.value).c_str(),
              res.monotone ? "monotone ladder" : "non-monotone ladder");
  Table t;
  t.header = {"delta", "estimate"};
  for (std::size_t i = 0; i < res.deltas.size(); ++i)
    t.rows.push_back({res.deltas[i], res.estimates[i]});
  sink.write("hmeas.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_ghbound(const CommonArgs& args, const std::string& dx_path,
                const std::string& dy_path) {
  (void)args;
  Table tx = read_table_csv(dx_path), ty = read_table_csv(dy_path);
  auto to_mat = [](const Table& t) {
    Mat m(t.rows.size(), t.rows.empty() ? 0 : t.rows[0].size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      for (std::size_t j = 0; j < t.rows[i].size(); ++j)
        m(static_cast<int>(i), static_cast<int>(j)) = t.rows[i][j];
    return m;
  };
  Mat dx = to_mat(tx), dy = to_mat(ty);
  if (dx.rows() != dy.rows())
    throw InputError("distance matrices differ in size");
  FiniteMetricSpace X(dx), Y(dy);
  double dis = 0.0;
  for (int i = 0; i < X.size(); ++i)
    for (int j = i + 1; j < X.size(); ++j)
      dis = std::max(dis, std::abs(X(i, j) - Y(i, j)));
  std::printf("distortion %s, gh bound %s\n", double_to_string(dis).c_str(),
              double_to_string(2.0 * dis).c_str());
  return 0;
}

int cmd_midpoint(const CommonArgs& args, const std::string& dist_path,
                 double eps) {
  (void)args;
  Table t = read_table_csv(dist_path);
  Mat d(t.rows.size(), t.rows.empty() ? 0 : t.rows[0].size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.rows[i].size(); ++j)
      d(static_cast<int>(i), static_cast<int>(j)) = t.rows[i][j];
  FiniteMetricSpace space(d);
  auto fails = path_metric_midpoint_check(space, eps);
  std::printf("%zu pairs without an eps-midpoint\n", fails.size());
  for (const auto& f : fails)
    std::printf("  (%d, %d): best %s vs d/2 + eps = %s\n", f.i, f.j,
                double_to_string(f.best).c_str(),
                double_to_string(0.5 * space(f.i, f.j) + eps).c_str());
  return fails.empty() ? 0 : 3;
}

int cmd_cone(const CommonArgs& args, const std::string& lambdas, int n_points,
             int budget) {
  OutputSink sink{args, "cone"};
  CarnotStructure cs = load_carnot(args);
  Rng rng(args.seed);
  std::vector<Vec> pts;
  pts.push_back(Vec::Zero(cs.dim()));
  for (int k = 1; k < n_points; ++k)
    pts.push_back(rng.uniform_vector(cs.dim(), -0.5, 0.5));
  CcOptions opt;
  opt.budget = budget;
  opt.starts = 4;
  opt.seed = args.seed;
  auto reference = cc_sample_space(cs, pts, opt, false);
  auto family = carnot_rescaled_family(cs, pts, opt);
  std::vector<double> lams =
      lambdas.empty() ? std::vector<double>{1, 2, 4, 8, 16}
                      : parse_list(lambdas);
  auto bounds = tangent_cone_experiment(family, lams, reference);
  Table t;
  t.header = {"lambda", "gh_bound"};
  for (std::size_t i = 0; i < lams.size(); ++i) {
    std::printf("lambda %-6g gh bound %s\n", lams[i],
                double_to_string(bounds[i]).c_str());
    t.rows.push_back({lams[i], bounds[i]});
  }
  sink.write("cone.csv", table_to_csv(t));
  sink.finish();
  return 0;
}

int cmd_report(const CommonArgs& args) {
  OutputSink sink{args, "report"};
  LieAlgebraSpec spec = read_algebra_file(args.algebra_path);

  struct Row {
    std::string check;
    double residual;
    double threshold;
    bool pass;
  };
  std::vector<Row> rows;
  auto add = [&](const std::string& name, double res, double thr) {
    rows.push_back({name, res, thr, res <= thr});
  };

  ValidationReport val = validate_algebra(spec);
  add("antisymmetry", val.antisymmetry_residual, 1e-10 * val.scale);
  add("jacobi_input", val.jacobi_residual, 1e-10 * val.scale);

  CarnotStructure cs = make_carnot(spec);
  add("jacobi_nilpotent", cs.nilpotent().jacobi_residual(), 1e-10 * val.scale);

  Rng rng(args.seed);
  double grading = 0.0, assoc = 0.0, inv = 0.0, norm_axiom = 0.0;
  double oracle = 0.0;
  std::vector<double> ladder = {0.2, 0.1, 0.05, 0.025};
  for (int rep = 0; rep < 100; ++rep) {
    Vec x = rng.uniform_vector(cs.dim(), -1, 1);
    Vec y = rng.uniform_vector(cs.dim(), -1, 1);
    Vec z = rng.uniform_vector(cs.dim(), -1, 1);
    for (double eps : {0.5, 2.0}) {
      grading = std::max(
          grading, (cs.nilpotent().apply(cs.dilate(eps, x), cs.dilate(eps, y)) -
                    cs.dilate(eps, cs.nilpotent().apply(x, y)))
                       .norm());
      norm_axiom = std::max(
          norm_axiom,
          std::abs(homogeneous_norm(cs, cs.dilate(eps, x), NormKind::One) -
                   eps * homogeneous_norm(cs, x, NormKind::One)));
    }
    assoc = std::max(assoc, (bch_multiply(cs, bch_multiply(cs, x, y), z) -
                             bch_multiply(cs, x, bch_multiply(cs, y, z)))
                                .norm());
    inv = std::max(inv, bch_multiply(cs, x, group_inverse(x)).norm());
    auto lim = nilpotent_bracket_limit(cs, x, y, ladder);
    oracle = std::max(oracle, (lim.value - cs.nilpotent().apply(x, y)).norm());
  }
  add("grading_automorphism", grading, 1e-10);
  add("associativity", assoc, 1e-10);
  add("inverse", inv, 1e-12);
  add("norm_dilation", norm_axiom, 1e-10);
  add("bracket_limit_oracle", oracle, 1e-8);

  bool all = true;
  std::printf("%-24s %-14s %-14s %s\n", "check", "residual", "threshold",
              "status");
  Table t;
  t.header = {"check_id", "residual", "threshold", "pass"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    std::printf("%-24s %-14g %-14g %s\n", r.check.c_str(), r.residual,
                r.threshold, r.pass ? "pass" : "FAIL");
    t.rows.push_back({static_cast<double>(i), r.residual, r.threshold,
                      r.pass ? 1.0 : 0.0});
    all = all && r.pass;
  }
  sink.write("report.csv", table_to_csv(t));
  sink.finish();
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> known = {
      "validate", "nilpotentize", "mul",      "norm",     "ccdist",
      "hausdim",  "factorize",    "pansu",    "develop",  "lift",
      "iarea",    "hlift",        "symplift", "hamflow",  "hofer-check",
      "var",      "hmeas",        "ghbound",  "midpoint", "cone",
      "report"};
  if (argc < 2 ||
      (std::find(known.begin(), known.end(), std::string(argv[1])) ==
           known.end() &&
       std::string(argv[1]) != "--help" && std::string(argv[1]) != "-h" &&
       std::string(argv[1]) != "--version")) {
    std::fprintf(stderr, "usage: carnot-kit <subcommand> [options]\n");
    std::fprintf(stderr, "subcommands:");
    for (const auto& k : known) std::fprintf(stderr, " %s", k.c_str());
    std::fprintf(stderr, "\n");
    return 64;
  }

  CLI::App app{kVersion};
  app.require_subcommand(1);

  CommonArgs common;
  std::string xs, ys, kind = "one", map_spec, curve_path, ham, lambdas,
              scale_list, cloud_path, dx_path, dy_path, dist_path;
  int segments = 4, budget = 1500, starts = 6, n_scales = 8, iarea_order = 1,
      grid = 24, steps = 1000, n_points = 8, cone_budget = 2500;
  std::size_t samples = 250000;
  double radius = 0.5, xbar0 = 0.0, offset_a = 0.0, T = 1.0, hscale = 1.0,
         a_radius = 2.0, kexp = 1.0, eps = 0.01;
  std::string deltas, ladder;

  auto add_common = [&](CLI::App* sub, bool needs_algebra) {
    if (needs_algebra)
      sub->add_option("--algebra", common.algebra_path, "algebra spec file");
    sub->add_option("--seed", common.seed, "RNG seed (default 0)");
    sub->add_option("--tol", common.tol, "tolerance");
    sub->add_option("--out", common.out_dir, "output directory");
  };

  int rc = 0;
  auto wrap = [&rc](const std::function<int()>& fn) {
    return [fn, &rc]() { rc = fn(); };
  };

  auto* validate = app.add_subcommand("validate", "check a Lie algebra file");
  add_common(validate, true);
  validate->callback(wrap([&] { return cmd_validate(common); }));

  auto* nil = app.add_subcommand("nilpotentize", "graded bracket table");
  add_common(nil, true);
  nil->callback(wrap([&] { return cmd_nilpotentize(common); }));

  auto* mul = app.add_subcommand("mul", "group product");
  add_common(mul, true);
  mul->add_option("--x", xs)->required();
  mul->add_option("--y", ys)->required();
  mul->callback(wrap([&] { return cmd_mul(common, xs, ys); }));

  auto* norm = app.add_subcommand("norm", "homogeneous norm");
  add_common(norm, true);
  norm->add_option("--x", xs)->required();
  norm->add_option("--kind", kind, "one or inf");
  norm->callback(wrap([&] { return cmd_norm(common, xs, kind); }));

  auto* ccdist = app.add_subcommand("ccdist", "CC distance upper bound");
  add_common(ccdist, true);
  ccdist->add_option("--x", xs)->required();
  ccdist->add_option("--y", ys)->required();
  ccdist->add_option("--segments", segments);
  ccdist->add_option("--budget", budget);
  ccdist->add_option("--starts", starts);
  ccdist->callback(
      wrap([&] { return cmd_ccdist(common, xs, ys, segments, budget, starts); }));

  auto* hausdim = app.add_subcommand("hausdim", "packing dimension estimate");
  add_common(hausdim, true);
  hausdim->add_option("--scales", n_scales, "number of log-spaced scales");
  hausdim->add_option("--scale-list", scale_list, "explicit scales");
  hausdim->add_option("--samples", samples);
  hausdim->callback(wrap(
      [&] { return cmd_hausdim(common, n_scales, scale_list, samples); }));

  auto* fact = app.add_subcommand("factorize", "product-of-exponentials word");
  add_common(fact, true);
  fact->add_option("--x", xs)->required();
  fact->add_option("--radius", radius, "chart radius in |.|_1");
  fact->callback(wrap([&] { return cmd_factorize(common, xs, radius); }));

  auto* pansu = app.add_subcommand("pansu", "Pansu derivative estimate");
  add_common(pansu, true);
  pansu->add_option("--map", map_spec, "left:..., right:..., dilate:lambda")
      ->required();
  pansu->add_option("--x", xs)->required();
  pansu->add_option("--eps-ladder", ladder);
  pansu->callback(wrap([&] { return cmd_pansu(common, map_spec, xs, ladder); }));

  for (const char* which : {"develop", "lift", "iarea"}) {
    auto* sub = app.add_subcommand(which, "curve operation");
    add_common(sub, true);
    sub->add_option("--curve", curve_path, "curve CSV (t, x_1..x_dim)")
        ->required();
    if (std::string(which) == "iarea") sub->add_option("--i", iarea_order);
    std::string w = which;
    sub->callback(
        wrap([&, w] { return cmd_curve_op(common, w, curve_path, iarea_order); }));
  }

  auto* hlift = app.add_subcommand("hlift", "horizontal lift of a planar curve");
  add_common(hlift, false);
  hlift->add_option("--curve", curve_path)->required();
  hlift->add_option("--xbar0", xbar0);
  hlift->callback(wrap([&] { return cmd_hlift(common, curve_path, xbar0); }));

  auto* symp = app.add_subcommand("symplift", "lift a symplectomorphism");
  add_common(symp, false);
  symp->add_option("--map", map_spec,
                   "identity | linear:a,b,c,d | rotation:t | shear:k | "
                   "diag:a,b | hamflow:<ham>")
      ->required();
  symp->add_option("--a", offset_a, "vertical offset");
  symp->add_option("--grid", grid);
  symp->add_option("--steps", steps);
  symp->callback(
      wrap([&] { return cmd_symplift(common, map_spec, offset_a, grid, steps); }));

  auto* flow = app.add_subcommand("hamflow", "integrate a Hamiltonian flow");
  add_common(flow, false);
  flow->add_option("--ham", ham, "quadratic:r0,R,amp | poly:R,amp,cx,cy")
      ->required();
  flow->add_option("--x0", xs)->required();
  flow->add_option("--T", T);
  flow->add_option("--steps", steps);
  flow->callback(wrap([&] { return cmd_hamflow(common, ham, xs, T, steps); }));

  auto* hofer = app.add_subcommand("hofer-check", "Hofer lower-bound check");
  add_common(hofer, false);
  hofer->add_option("--ham", ham)->required();
  hofer->add_option("--scale", hscale, "Hamiltonian amplitude scale");
  hofer->add_option("--support-radius", a_radius, "radius of the region A");
  hofer->add_option("--steps", steps);
  hofer->callback(
      wrap([&] { return cmd_hofer_check(common, ham, hscale, a_radius, steps); }));

  auto* var = app.add_subcommand("var", "variation of a sampled curve");
  add_common(var, false);
  var->add_option("--curve", curve_path)->required();
  var->callback(wrap([&] { return cmd_var(common, curve_path); }));

  auto* hmeas = app.add_subcommand("hmeas", "Hausdorff measure estimate");
  add_common(hmeas, false);
  hmeas->add_option("--cloud", cloud_path, "point CSV with header")->required();
  hmeas->add_option("--k", kexp)->required();
  hmeas->add_option("--deltas", deltas)->required();
  hmeas->callback(
      wrap([&] { return cmd_hmeas(common, cloud_path, kexp, deltas); }));

  auto* gh = app.add_subcommand("ghbound", "GH bound from two distance CSVs");
  add_common(gh, false);
  gh->add_option("--dx", dx_path)->required();
  gh->add_option("--dy", dy_path)->required();
  gh->callback(wrap([&] { return cmd_ghbound(common, dx_path, dy_path); }));

  auto* mid = app.add_subcommand("midpoint", "approximate midpoint criterion");
  add_common(mid, false);
  mid->add_option("--dist", dist_path)->required();
  mid->add_option("--eps", eps);
  mid->callback(wrap([&] { return cmd_midpoint(common, dist_path, eps); }));

  auto* cone = app.add_subcommand("cone", "tangent cone experiment");
  add_common(cone, true);
  cone->add_option("--lambdas", lambdas);
  cone->add_option("--points", n_points);
  cone->add_option("--budget", cone_budget);
  cone->callback(
      wrap([&] { return cmd_cone(common, lambdas, n_points, cone_budget); }));

  auto* report = app.add_subcommand("report", "invariant suite for an algebra");
  add_common(report, true);
  report->callback(wrap([&] { return cmd_report(common); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const carnot::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 74;
  } catch (const carnot::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const carnot::NumericalDiagnostic& e) {
    std::fprintf(stderr, "diagnostic: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
