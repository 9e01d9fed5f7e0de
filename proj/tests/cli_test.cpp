#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "analysis.hpp"
#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "system_file.hpp"

namespace koopman::cli {
namespace {

namespace fs = std::filesystem;

Complex coef(const MonomialPoly& p, int a, int b) { return p.coefficient(MultiIndex({a, b})); }

int parse_error_column(const std::string& text, int* line = nullptr) {
  try {
    parse_system(text);
  } catch (const ParseError& e) {
    if (line) *line = e.line();
    return e.column();
  }
  return -1;
}

TEST(ParserTest, Example3Field) {
  const SystemDefinition def = parse_system("dim = 2\nf1 = -x2\nf2 = x1 - x2 + x1^2*x2\n");
  ASSERT_EQ(def.dimension, 2);
  const auto ref = builtin::example3().components();
  EXPECT_EQ(def.components[0], ref[0]);
  EXPECT_EQ(def.components[1], ref[1]);
}

TEST(ParserTest, Example5RationalCoefficients) {
  const SystemDefinition def =
      parse_system("dim = 2\nf1 = -3/4*x1 - 1/8*x2 + 1/4*x1*x2 - 1/4*x2^2 - 1/2*x1^3\nf2 = -1/8*x1 - x2");
  EXPECT_EQ(def.components[0], builtin::example5().components()[0]);
  EXPECT_EQ(def.components[1], builtin::example5().components()[1]);
  EXPECT_EQ(coef(def.components[0], 0, 1), Complex(-0.125));
}

TEST(ParserTest, PrecedenceAndParentheses) {
  const MonomialPoly p = parse_expression("-x1^2 + 2*(x1 + 1)^2 - 0.5e1", 2);
  // −x1² + 2x1² + 4x1 + 2 − 5
  EXPECT_EQ(coef(p, 2, 0), Complex(1.0));
  EXPECT_EQ(coef(p, 1, 0), Complex(4.0));
  EXPECT_EQ(coef(p, 0, 0), Complex(-3.0));
  EXPECT_EQ(parse_expression("x1*-x2", 2), Complex(-1.0) * MonomialPoly::monomial(MultiIndex({1, 1}), 1.0));
  EXPECT_TRUE(parse_expression("x1 - x1", 2).is_zero());
}

TEST(ParserTest, CommentsSeparatorsAndKeys) {
  const SystemDefinition def = parse_system(
      "# header\n"
      "dim = 2  # planar\n"
      "f1 = -x1; f2 = -2*x2\n"
      "box = -1 1 -1/2 3/2\n"
      "guess = 0.1 0\n"
      "order = 12\n");
  EXPECT_EQ(def.expressions[1], "-2*x2");
  ASSERT_TRUE(def.box_lower && def.box_upper && def.guess);
  EXPECT_EQ((*def.box_lower)(1), -0.5);
  EXPECT_EQ((*def.box_upper)(1), 1.5);
  EXPECT_EQ((*def.guess)(0), 0.1);
  EXPECT_EQ(def.parameters.at("order"), "12");
}

TEST(ParserTest, UndeclaredVariable) {
  int line = 0;
  EXPECT_EQ(parse_error_column("dim = 2\nf1 = x3\nf2 = x1", &line), 6);
  EXPECT_EQ(line, 2);
  EXPECT_THROW(parse_expression("x0", 2), ParseError);
}

TEST(ParserTest, DimensionMismatches) {
  EXPECT_THROW(parse_system("dim = 2\nf1 = x1"), ParseError);
  EXPECT_THROW(parse_system("dim = 1\nf1 = x1\nf2 = x1"), ParseError);
  EXPECT_THROW(parse_system("f1 = x1\ndim = 1"), ParseError);
  EXPECT_THROW(parse_system("dim = 1\nf1 = x1\nf1 = x1"), ParseError);
  EXPECT_THROW(parse_system("dim = 1\nf1 = x1\nbox = 0 1 2"), ParseError);
  EXPECT_THROW(parse_system("dim = 1\nf1 = x1\nbox = 1 0"), ParseError);
  EXPECT_THROW(parse_system("dim = two\nf1 = x1"), ParseError);
}

TEST(ParserTest, SyntaxErrorsCarryColumns) {
  int line = 0;
  EXPECT_EQ(parse_error_column("dim = 1\n\nf1 = 2 * * x1", &line), 10);
  EXPECT_EQ(line, 3);
  EXPECT_EQ(parse_error_column("dim = 1\nf1 = (x1 + 1"), 13);
  EXPECT_EQ(parse_error_column("dim = 1\nf1 = x1^1.5"), 9);
  EXPECT_EQ(parse_error_column("dim = 1\nf1 = 1/0"), 8);
  EXPECT_EQ(parse_error_column("dim = 1\nf1 x1"), 1);
}

const char* kLinear = "dim = 2\nf1 = -x1\nf2 = -5/2*x2\nbox = -1 1 -1 1\norder = 3\nresolution = 21\n";

SystemSource text_source(const std::string& text) {
  SystemSource s;
  s.text = text;
  return s;
}

FpConfig config_for(const std::string& text) {
  FpConfig cfg;
  cfg.apply(parse_system(text));
  return cfg;
}

std::string grid_csv(const Analysis& a, int resolution) {
  std::ostringstream out;
  write_grid_csv(out, a, resolution);
  return out.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(GridCsvTest, ThreeByThreeLinear) {
  const Analysis a = analyze_fixed_point(text_source(kLinear), config_for(kLinear));
  const auto rows = csv_rows(grid_csv(a, 3));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x1", "x2", "re_phi", "im_phi", "abs_phi", "lyapunov", "decreasing"}));
  // x2 varies fastest.
  EXPECT_EQ(rows[1][0] + "," + rows[1][1], "-1,-1");
  EXPECT_EQ(rows[2][0] + "," + rows[2][1], "-1,0");
  EXPECT_EQ(rows[4][0] + "," + rows[4][1], "0,-1");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 7u);
    const double re = std::stod(rows[i][2]), im = std::stod(rows[i][3]), ab = std::stod(rows[i][4]);
    EXPECT_DOUBLE_EQ(ab, std::sqrt(re * re + im * im));
    // φ₁ = x1 for this diagonal system, V = ‖x‖.
    EXPECT_NEAR(re, std::stod(rows[i][0]), 1e-14);
    EXPECT_NEAR(std::stod(rows[i][5]), std::hypot(std::stod(rows[i][0]), std::stod(rows[i][1])), 1e-14);
    EXPECT_EQ(rows[i][6], "1");
  }
}

TEST(GridCsvTest, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  for (double v : {M_PI, 1.0 / 3.0, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(NAN), "nan");
}

TEST(ReportTest, SchemaAndDeterminism) {
  const Analysis a = analyze_fixed_point(text_source(kLinear), config_for(kLinear));
  const Analysis b = analyze_fixed_point(text_source(kLinear), config_for(kLinear));
  EXPECT_EQ(a.report["schema"], 1);
  EXPECT_TRUE(a.certified);
  EXPECT_EQ(a.report["certified"], true);
  for (const char* key : {"spectrum", "eigenfunctions", "lyapunov", "verification", "timing", "input"}) {
    EXPECT_TRUE(a.report.contains(key)) << key;
  }
  const auto& v = a.report["verification"];
  EXPECT_LT(v["semigroup"]["max_error"].get<double>(), 1e-9);
  EXPECT_TRUE(v["envelope"]["passed"].get<bool>());
  EXPECT_EQ(v["soundness"]["failures"], 0);
  Json ja = a.report, jb = b.report;
  ja.erase("timing");
  jb.erase("timing");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(grid_csv(a, 17), grid_csv(b, 17));
  // Re-running from the report reproduces the same grid.
  EXPECT_EQ(grid_csv(rerun(Json::parse(a.report.dump())), 17), grid_csv(a, 17));
}

TEST(ReportTest, TaylorExample3) {
  FpConfig cfg;
  cfg.order = 20;
  cfg.resolution = 61;
  SystemSource src;
  src.builtin = "example3";
  const Analysis a = analyze_fixed_point(src, cfg);
  const auto& ef = a.report["eigenfunctions"][0];
  EXPECT_GT(ef["radius"].get<double>(), 1.0);
  EXPECT_LE(ef["trusted_radius"].get<double>(), ef["radius"].get<double>());
  EXPECT_TRUE(a.report["lyapunov"]["certified"].get<bool>());
  EXPECT_EQ(a.report["lyapunov"]["p"], 1);
  EXPECT_TRUE(a.certified);
}

TEST(ReportTest, BernsteinBoxBeyondBasinIsNotCertified) {
  FpConfig cfg;
  cfg.method = "bernstein";
  cfg.degree = 20;
  cfg.box = std::vector<double>{-3, 3, -3, 3};
  cfg.resolution = 41;
  SystemSource src;
  src.builtin = "example3";
  const Analysis a = analyze_fixed_point(src, cfg);
  EXPECT_FALSE(a.certified);
  EXPECT_GE(a.report["eigenfunctions"][0]["residual"].get<double>(), 1e-2);
  EXPECT_FALSE(a.report["eigenfunctions"][0]["certified"].get<bool>());
}

TEST(ReportTest, StageIsNamedOnFailure) {
  FpConfig cfg;
  cfg.order = 4;
  const std::string resonant = "dim = 2\nf1 = -x1\nf2 = -2*x2 + x1^2\n";
  try {
    analyze_fixed_point(text_source(resonant), cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "taylor");
  }
  try {
    analyze_fixed_point(text_source("dim = 1\nf1 = x2\n"), cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "parse");
  }
  EXPECT_THROW(config_for("dim = 1\nf1 = -x1\nbogus = 3\n"), Error);
}

TEST(ReportTest, CircleLimitCycle) {
  LcConfig cfg;
  cfg.n_bar = 4;
  cfg.s_prime = 2;
  cfg.resolution = 11;
  SystemSource src;
  src.builtin = "circle";
  const Analysis a = analyze_limit_cycle(src, cfg);
  EXPECT_TRUE(a.certified);
  EXPECT_NEAR(a.report["limit_cycle"]["exponents"][0]["re"].get<double>(), -1.0, 1e-6);
  EXPECT_TRUE(a.report["verification"]["fresh_residual"]["passed"].get<bool>());
  std::ostringstream ann;
  write_annulus_csv(ann, a, 8);
  const auto rows = csv_rows(ann.str());
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"theta", "y", "x1", "x2", "log_abs_phi"}));
  // Outside the annulus the grid prints nan instead of extrapolating.
  const auto grid = csv_rows(grid_csv(a, 11));
  EXPECT_EQ(grid[1][2], "nan");
  EXPECT_EQ(grid[1][6], "0");
}

#ifdef KOOPMAN_CLI_PATH
class CliBinaryTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("koopman_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(KOOPMAN_CLI_PATH) + " " + args + " > " + (dir_ / "stdout").string() +
                            " 2> " + (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

TEST_F(CliBinaryTest, ExitCodes) {
  write("linear.sys", kLinear);
  EXPECT_EQ(run("analyze-fp " + path("linear.sys") + " -o " + path("a.json")), 0);
  EXPECT_EQ(run("analyze-fp --builtin example3 --method bernstein --degree 12 --box -3 3 -3 3 --resolution 31 -o " +
                path("b.json")),
            2);
  write("bad.sys", "dim = 2\nf1 = x3\nf2 = x1\n");
  EXPECT_EQ(run("analyze-fp " + path("bad.sys")), 1);
  EXPECT_NE(slurp("stderr").find("line 2, column 6"), std::string::npos);
  EXPECT_EQ(run("analyze-fp " + path("missing.sys")), 1);
}

TEST_F(CliBinaryTest, FlagsOverrideFileAndGridIsReproducible) {
  write("linear.sys", kLinear);
  ASSERT_EQ(run("analyze-fp " + path("linear.sys") + " --order 5 --seed 9 -o " + path("r1.json") + " --grid " +
                path("g1.csv") + " --grid-resolution 9"),
            0);
  const Json r1 = Json::parse(slurp("r1.json"));
  EXPECT_EQ(r1["input"]["config"]["order"], 5);
  EXPECT_EQ(r1["input"]["config"]["seed"], 9);
  EXPECT_EQ(r1["input"]["config"]["resolution"], 21);
  ASSERT_EQ(run("emit-grid --report " + path("r1.json") + " --resolution 9 -o " + path("g2.csv")), 0);
  EXPECT_EQ(slurp("g1.csv"), slurp("g2.csv"));
  ASSERT_EQ(run("analyze-fp " + path("linear.sys") + " --order 5 --seed 9 -o " + path("r2.json")), 0);
  Json a = Json::parse(slurp("r1.json")), b = Json::parse(slurp("r2.json"));
  a.erase("timing");
  b.erase("timing");
  EXPECT_EQ(a, b);
  EXPECT_EQ(run("verify --report " + path("r1.json") + " --samples 50 --seed 3 -o " + path("v.json")), 0);
  EXPECT_TRUE(Json::parse(slurp("v.json"))["passed"].get<bool>());
}
#endif

}  // namespace
}  // namespace koopman::cli
