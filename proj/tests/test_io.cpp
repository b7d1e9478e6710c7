#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "schedloc/io.hpp"
#include "support.hpp"

using namespace schedloc;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "schedloc_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& line : lines) out << line << '\n';
}

}  // namespace

TEST_CASE("format_double round trips every value bit-exactly") {
  std::mt19937_64 rng(71);
  std::vector<double> values = {0.0, -0.0, 1.0, 3e-3, 2.9999999999999997e-3,
                                1e-300, -4.9406564584124654e-324, 0.1};
  for (int i = 0; i < 200; ++i) {
    values.push_back(std::ldexp(testing::uniform_real(rng, -1.0, 1.0),
                                testing::uniform_int(rng, -60, 60)));
  }
  for (double v : values) {
    const std::string s = format_double(v);
    double parsed = 0.0;
    REQUIRE(std::from_chars(s.data(), s.data() + s.size(), parsed).ec == std::errc{});
    CHECK(std::memcmp(&parsed, &v, sizeof(double)) == 0);
  }
}

TEST_CASE("measurement CSV round trip is lossless") {
  const Schedule schedule{{1, 2, 3, 2, 1, 3}, 3e-3};
  std::mt19937_64 rng(72);
  std::vector<MeasurementBatch> batches;
  for (int b = 0; b < 4; ++b) {
    MeasurementBatch batch;
    batch.y.resize(5);
    batch.delta_actual.resize(5);
    for (int k = 0; k < 5; ++k) {
      batch.y[k] = 3e-3 + testing::uniform_real(rng, -1e-7, 1e-7);
      batch.delta_actual[k] = 3e-3 + testing::uniform_real(rng, -1e-8, 1e-8);
    }
    batches.push_back(std::move(batch));
  }
  batches[2].delta_actual.resize(0);  // payload missing on one batch

  const auto path = temp_dir() / "measurements.csv";
  write_measurements_csv(path, schedule, batches);
  const std::vector<MeasurementBatch> back = read_measurements_csv(path, schedule);

  REQUIRE(back.size() == batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    CHECK(back[b].y == batches[b].y);
    CHECK(back[b].has_delay_payload() == batches[b].has_delay_payload());
    if (batches[b].has_delay_payload()) {
      CHECK(back[b].delta_actual == batches[b].delta_actual);
    }
  }
}

TEST_CASE("measurement CSV errors carry line numbers") {
  const Schedule schedule{{1, 2, 3, 2, 1, 3}, 3e-3};
  const auto dir = temp_dir();

  SECTION("wrong header") {
    const auto path = dir / "bad_header.csv";
    write_lines(path, {"batch,k,sender,other,y,delta"});
    CHECK_THROWS_WITH(read_measurements_csv(path, schedule),
                      Catch::Matchers::ContainsSubstring(":1:"));
  }
  SECTION("malformed number") {
    const auto path = dir / "bad_number.csv";
    write_lines(path, {"batch,k,sender,next_sender,y_seconds,delta_actual_seconds",
                       "0,0,1,2,abc,0.003"});
    CHECK_THROWS_WITH(read_measurements_csv(path, schedule),
                      Catch::Matchers::ContainsSubstring(":2:"));
  }
  SECTION("sender mismatch against the configured schedule") {
    const auto path = dir / "bad_sender.csv";
    write_lines(path, {"batch,k,sender,next_sender,y_seconds,delta_actual_seconds",
                       "0,0,2,1,0.003,0.003"});
    CHECK_THROWS_WITH(read_measurements_csv(path, schedule),
                      Catch::Matchers::ContainsSubstring("schedule"));
  }
  SECTION("truncated batch") {
    const auto path = dir / "truncated.csv";
    write_lines(path, {"batch,k,sender,next_sender,y_seconds,delta_actual_seconds",
                       "0,0,1,2,0.003,0.003", "0,1,2,3,0.003,0.003"});
    CHECK_THROWS_WITH(read_measurements_csv(path, schedule),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(read_measurements_csv(dir / "nope.csv", schedule), DataError);
  }
}

TEST_CASE("calibrated CSV round trip") {
  const Schedule schedule{{1, 2, 3, 2, 1, 3, 1}, 3e-3};
  std::mt19937_64 rng(73);
  std::vector<CalibratedRecord> records;
  for (int b = 0; b < 3; ++b) {
    CalibratedRecord rec;
    rec.batch = b;
    rec.y_cal.resize(6);
    rec.delta_used.resize(6);
    for (int k = 0; k < 6; ++k) {
      rec.y_cal[k] = 3e-3 + testing::uniform_real(rng, -1e-7, 1e-7);
      rec.delta_used[k] = 3e-3 + testing::uniform_real(rng, -1e-8, 1e-8);
    }
    records.push_back(std::move(rec));
  }
  const auto path = temp_dir() / "calibrated.csv";
  write_calibrated_csv(path, schedule, records);
  const std::vector<CalibratedRecord> back = read_calibrated_csv(path, schedule);
  REQUIRE(back.size() == records.size());
  for (std::size_t b = 0; b < records.size(); ++b) {
    CHECK(back[b].y_cal == records[b].y_cal);
    CHECK(back[b].delta_used == records[b].delta_used);
  }
}

TEST_CASE("trace, rejection and matrix CSV writers") {
  const auto dir = temp_dir();
  std::vector<RlsTraceRow> trace;
  Eigen::VectorXd theta(3);
  theta << 1e-6, -2e-6, 3e-6;
  trace.push_back({1, theta, 2.5e6});
  write_rls_trace_csv(dir / "trace.csv", trace);
  {
    std::ifstream in(dir / "trace.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "n,theta_hat_1,theta_hat_2,theta_hat_3,trace_P");
  }

  write_rejections_csv(dir / "rej.csv", {{0, false, 4.2e-8}, {1, true, 2.3e-7}});
  {
    std::ifstream in(dir / "rej.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "batch,rejected,max_abs_dev_ns");
    std::getline(in, line);
    CHECK(line.rfind("0,0,", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("1,1,", 0) == 0);
  }

  Eigen::MatrixXd m(2, 3);
  m << 1.5, -2.25, 0.0, 3.0, 4.5, -1.0;
  write_matrix_csv(dir / "m.csv", m);
  {
    std::ifstream in(dir / "m.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "1.5,-2.25,0");
    std::getline(in, line);
    CHECK(line == "3,4.5,-1");
  }
}

TEST_CASE("ellipse JSON carries the documented schema") {
  ErrorEllipse e;
  e.center = Vec2(1.92, 2.42);
  e.semi_major = 1.3;
  e.semi_minor = 0.8;
  e.orientation = -0.71;
  e.confidence = 0.99;
  const auto j = nlohmann::json::parse(ellipse_json(e, EllipseKind::Hcrb));
  CHECK(j.at("center")[0].get<double>() == 1.92);
  CHECK(j.at("center")[1].get<double>() == 2.42);
  CHECK(j.at("semi_axes")[0].get<double>() == 1.3);
  CHECK(j.at("semi_axes")[1].get<double>() == 0.8);
  CHECK(j.at("orientation_rad").get<double>() == -0.71);
  CHECK(j.at("confidence").get<double>() == 0.99);
  CHECK(j.at("kind").get<std::string>() == "hcrb");
  CHECK(ellipse_kind_name(EllipseKind::Simulated) == "simulated");
  CHECK(ellipse_kind_name(EllipseKind::MapExperimental) == "map_experimental");
}
