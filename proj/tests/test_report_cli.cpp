#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mable/cli.hpp"
#include "support.hpp"

using namespace mable;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("mable-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct CommandResult {
    int code;
    std::string err;
};

CommandResult run_cli(const std::string& args, const TempDir& dir) {
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(MABLE_CLI) + " " + args + " > " + (dir / "stdout.txt").string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

RunConfig chd_config() {
    RunConfig cfg;
    cfg.input = testing_support::data_path("chd.csv");
    cfg.support = std::make_pair(20.0, 70.0);
    cfg.candidates = CandidateDegrees{1, 19};
    return cfg;
}

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST(Csv, ParsesChd) {
    const auto raw = testing_support::chd_raw();
    EXPECT_EQ(raw.y0.size(), 57u);
    EXPECT_EQ(raw.y1.size(), 43u);
    const auto s = raw.default_support();
    EXPECT_EQ(s.lower(), 20.0);
    EXPECT_EQ(s.upper(), 69.0);
    const auto wide = raw.default_support(0.1);
    EXPECT_NEAR(wide.lower(), 20.0 - 4.9, 1e-12);
}

TEST(Csv, ToleratesCrlfAndBom) {
    std::istringstream in("\xEF\xBB\xBFvalue,group\r\n1.5,0\r\n\r\n2.5 , 1\r\n");
    const auto raw = parse_two_sample_csv(in);
    EXPECT_EQ(raw.y0, std::vector<double>{1.5});
    EXPECT_EQ(raw.y1, std::vector<double>{2.5});
}

TEST(Csv, ErrorsCarryLineNumbers) {
    auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_two_sample_csv(in);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("x,y\n1,0\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("value,group\n1,0\n2,2\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("value,group\n1,0\nabc,1\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("value,group\n1,0\n1,1,1\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("value,group\n1,0\nnan,1\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("value,group\n1,0\n").find("group 1 (case) is empty"), std::string::npos);
    EXPECT_NE(message("value,group\n1,1\n").find("group 0 (control) is empty"), std::string::npos);
    EXPECT_NE(message("").find("empty"), std::string::npos);
    EXPECT_THROW(read_two_sample_csv("/nonexistent/file.csv"), DomainError);
}

TEST(DegreeRange, Parsing) {
    const auto c = parse_degree_range("1:20");
    EXPECT_EQ(c.m0, 1);
    EXPECT_EQ(c.k, 19);
    EXPECT_THROW(parse_degree_range("5"), DomainError);
    EXPECT_THROW(parse_degree_range("5:5"), DomainError);
    EXPECT_THROW(parse_degree_range("a:9"), DomainError);
    EXPECT_THROW(parse_degree_range("0:9"), DomainError);
}

TEST(Report, ChdFitAndRoundTrip) {
    const auto report = cmd_fit(chd_config());
    EXPECT_EQ(report.m, 3);
    EXPECT_NEAR(report.alpha[0], -5.040, 0.05);
    EXPECT_NEAR(report.alpha[1], 0.111, 0.05);
    EXPECT_EQ(report.alpha, report.alpha_original);
    EXPECT_FALSE(report.swapped);
    EXPECT_EQ(report.m_b0, 3);
    ASSERT_TRUE(report.sweep.has_value());
    EXPECT_EQ(report.sweep->selected, 3);
    EXPECT_EQ(report.schema_version, report_schema_version);

    const std::string text = dump_report(report);
    const auto back = parse_report(text);
    EXPECT_EQ(back, report);
    EXPECT_EQ(dump_report(back), text);
    EXPECT_EQ(dump_report(cmd_fit(chd_config())), text);
}

TEST(Report, CorruptDocuments) {
    const std::string good = dump_report(cmd_fit(chd_config()));
    EXPECT_THROW(parse_report("{not json"), DataError);
    EXPECT_THROW(parse_report("{}"), DataError);
    auto j = nlohmann::json::parse(good);
    j["schema_version"] = 99;
    EXPECT_THROW(parse_report(j.dump()), DataError);
    j = nlohmann::json::parse(good);
    j["p"] = {0.5, 0.5};
    EXPECT_THROW(parse_report(j.dump()), DataError);
    j = nlohmann::json::parse(good);
    j["alpha"] = {1.0};
    EXPECT_THROW(parse_report(j.dump()), DataError);
    j = nlohmann::json::parse(good);
    j["p"] = {2.0, -1.0, 0.0, 0.0};
    EXPECT_THROW(parse_report(j.dump()), DataError);
}

TEST(Density, UniformModelIsFlat) {
    FitReport r;
    r.support_lower = 2.0;
    r.support_upper = 6.0;
    r.m = 3;
    r.p = std::vector<double>(4, 0.25);
    r.alpha = r.alpha_original = r.alpha_tilde = {0.0, 0.0};
    const auto rows = parse_numeric_csv(cmd_density(r, 40));
    ASSERT_EQ(rows.size(), 41u);
    for (const auto& row : rows) {
        EXPECT_NEAR(row[1], 0.25, 1e-12);
        EXPECT_NEAR(row[2], 0.25, 1e-12);
        EXPECT_NEAR(row[3], (row[0] - 2.0) / 4.0, 1e-12);
    }
}

TEST(Density, ChdGridProperties) {
    const auto report = cmd_fit(chd_config());
    const auto rows = parse_numeric_csv(cmd_density(report, 512));
    ASSERT_EQ(rows.size(), 513u);
    double integral = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        integral += 0.5 * (rows[i][1] + rows[i - 1][1]) * (rows[i][0] - rows[i - 1][0]);
        EXPECT_GE(rows[i][3], rows[i - 1][3]);
        EXPECT_GE(rows[i][4], rows[i - 1][4]);
    }
    EXPECT_NEAR(integral, 1.0, 1e-3);
    EXPECT_NEAR(rows.back()[4], 1.0, 1e-4);
    EXPECT_NEAR(rows.back()[3], 1.0, 1e-10);
    EXPECT_EQ(rows.front()[3], 0.0);
}

TEST(Density, SwappedReportKeepsInputLabels) {
    // Control concentrated, case spread: the case becomes the baseline.
    Engine rng = substream(71, 0);
    std::ostringstream csv;
    csv << "value,group\n";
    std::normal_distribution<double> concentrated(5.0, 1.0);
    for (int i = 0; i < 80; ++i) csv << std::clamp(concentrated(rng), 0.0, 10.0) << ",0\n";
    for (int i = 0; i < 80; ++i) csv << 10.0 * uniform01(rng) << ",1\n";
    TempDir dir;
    write_file(dir / "in.csv", csv.str());
    RunConfig cfg;
    cfg.input = dir / "in.csv";
    cfg.support = std::make_pair(0.0, 10.0);
    cfg.fixed_degree = 12;
    cfg.regressor_degree = 2;
    const auto report = cmd_fit(cfg);
    ASSERT_TRUE(report.swapped);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(report.alpha_original[i], -report.alpha[i]);
    EXPECT_EQ(report.n0, 80);
    const auto rows = parse_numeric_csv(cmd_density(report, 100));
    // Input group 0 is concentrated around 5, so its density peaks there.
    EXPECT_GT(rows[50][1], rows[50][2]);
    EXPECT_LT(rows[5][1], rows[5][2]);
}

TEST(Sample, DeterministicAndRefittable) {
    const auto report = cmd_fit(chd_config());
    const auto a = cmd_sample(report, 30, 20, 4);
    EXPECT_EQ(a, cmd_sample(report, 30, 20, 4));
    EXPECT_NE(a, cmd_sample(report, 30, 20, 5));
    std::istringstream in(a);
    const auto raw = parse_two_sample_csv(in);
    EXPECT_EQ(raw.y0.size(), 30u);
    EXPECT_EQ(raw.y1.size(), 20u);
    for (double v : raw.y1) {
        EXPECT_GE(v, 20.0);
        EXPECT_LE(v, 70.0);
    }
}

TEST(Bootstrap, ReportCarriesStandardErrors) {
    auto cfg = chd_config();
    cfg.fixed_degree = 3;
    cfg.bootstrap = 20;
    cfg.seed = 3;
    const auto report = cmd_bootstrap(cfg);
    ASSERT_TRUE(report.alpha_se.has_value());
    ASSERT_TRUE(report.bootstrap.has_value());
    EXPECT_EQ(report.bootstrap->replicates, 20);
    EXPECT_GT((*report.alpha_se)[1], 0.0);
    EXPECT_EQ(parse_report(dump_report(report)), report);
    EXPECT_EQ(cmd_bootstrap(cfg), report);
}

TEST(AtomicWrite, ReplacesContents) {
    TempDir dir;
    write_atomic(dir / "out.txt", "first");
    write_atomic(dir / "out.txt", "second");
    EXPECT_EQ(slurp(dir / "out.txt"), "second");
    EXPECT_THROW(write_atomic("/nonexistent/dir/out.txt", "x"), DomainError);
}

TEST(Executable, FitDensityAndDeterminism) {
    TempDir dir;
    const std::string csv = testing_support::data_path("chd.csv");
    const auto a = run_cli("fit " + csv + " --support 20 70 --degrees 1:20 -d 1 -o " + (dir / "a.json").string(), dir);
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run_cli("fit " + csv + " --support 20 70 --degrees 1:20 -d 1 -o " + (dir / "b.json").string(), dir);
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
    EXPECT_EQ(read_report(dir / "a.json").m, 3);
    const auto d = run_cli("density " + (dir / "a.json").string() + " --grid 64 -o " + (dir / "d.csv").string(), dir);
    ASSERT_EQ(d.code, 0) << d.err;
    EXPECT_EQ(parse_numeric_csv(slurp(dir / "d.csv")).size(), 65u);
    const auto s = run_cli("sample " + (dir / "a.json").string() + " --seed 3 -o " + (dir / "s.csv").string(), dir);
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(read_two_sample_csv(dir / "s.csv").y0.size(), 57u);
}

TEST(Executable, ExitCodes) {
    TempDir dir;
    write_file(dir / "empty1.csv", "value,group\n1,0\n2,0\n");
    const auto empty = run_cli("fit " + (dir / "empty1.csv").string(), dir);
    EXPECT_EQ(empty.code, 2);
    EXPECT_NE(empty.err.find("group 1 (case) is empty"), std::string::npos) << empty.err;

    write_file(dir / "flat.csv", "value,group\n1,0\n1,0\n2,1\n3,1\n4,1\n");
    EXPECT_EQ(run_cli("fit " + (dir / "flat.csv").string(), dir).code, 2);

    EXPECT_EQ(run_cli("fit", dir).code, 1);
    EXPECT_EQ(run_cli("fit " + (dir / "flat.csv").string() + " --bogus", dir).code, 1);
    EXPECT_EQ(run_cli("fit " + (dir / "missing.csv").string(), dir).code, 1);
    EXPECT_EQ(run_cli("fit " + testing_support::data_path("chd.csv") + " --mode sideways", dir).code, 1);

    // Perfectly separated groups make the logistic fit diverge.
    write_file(dir / "sep.csv", "value,group\n1,0\n2,0\n3,0\n4,0\n6,1\n7,1\n8,1\n9,1\n");
    const auto sep = run_cli("fit " + (dir / "sep.csv").string() + " --support 0 10 --degree 3", dir);
    EXPECT_EQ(sep.code, 3) << sep.err;

    write_file(dir / "bad.json", "{\"schema_version\": 1}");
    EXPECT_EQ(run_cli("density " + (dir / "bad.json").string(), dir).code, 2);
}
