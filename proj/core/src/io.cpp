#include "schedloc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace schedloc {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[noreturn]] void row_error(const std::filesystem::path& path, int line_no,
                            const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

int parse_int(const std::string& field, const std::filesystem::path& path, int line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    row_error(path, line_no, "malformed integer '" + field + "'");
  }
  return value;
}

double parse_dbl(const std::string& field, const std::filesystem::path& path, int line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    row_error(path, line_no, "malformed number '" + field + "'");
  }
  return value;
}

// Shared reader for the measurement and calibrated layouts; they differ only
// in the names of the two value columns.
template <typename RowSink>
void read_schedule_csv(const std::filesystem::path& path, const Schedule& schedule,
                       const std::string& header, bool delta_required, RowSink&& sink) {
  std::ifstream in = open_input(path);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  ++line_no;
  if (line == header + "\r") line.pop_back();
  if (line != header) {
    row_error(path, line_no, "expected header '" + header + "'");
  }

  const int m = schedule.num_measurements();
  int expected_batch = 0;
  int expected_k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 6) {
      row_error(path, line_no, "expected 6 fields, got " + std::to_string(fields.size()));
    }
    const int batch = parse_int(fields[0], path, line_no);
    const int k = parse_int(fields[1], path, line_no);
    const int sender = parse_int(fields[2], path, line_no);
    const int next_sender = parse_int(fields[3], path, line_no);
    if (batch != expected_batch || k != expected_k) {
      row_error(path, line_no,
                "rows must be contiguous: expected batch " + std::to_string(expected_batch) +
                    " k " + std::to_string(expected_k));
    }
    if (sender != schedule.order[static_cast<std::size_t>(k)] ||
        next_sender != schedule.order[static_cast<std::size_t>(k) + 1]) {
      row_error(path, line_no, "sender pair does not match the configured schedule");
    }
    const double y = parse_dbl(fields[4], path, line_no);
    bool has_delta = !fields[5].empty();
    if (!has_delta && delta_required) {
      row_error(path, line_no, "missing delay value");
    }
    const double delta = has_delta ? parse_dbl(fields[5], path, line_no) : 0.0;
    sink(batch, k, y, has_delta, delta, line_no);
    ++expected_k;
    if (expected_k == m) {
      expected_k = 0;
      ++expected_batch;
    }
  }
  if (expected_k != 0) {
    throw DataError(path.string() + ": truncated batch " + std::to_string(expected_batch));
  }
  if (expected_batch == 0) {
    throw DataError(path.string() + ": no data rows");
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw DataError("cannot format double");
  return std::string(buffer, ptr);
}

void write_measurements_csv(const std::filesystem::path& path, const Schedule& schedule,
                            const std::vector<MeasurementBatch>& batches) {
  std::ofstream out = open_output(path);
  out << "batch,k,sender,next_sender,y_seconds,delta_actual_seconds\n";
  const int m = schedule.num_measurements();
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const MeasurementBatch& batch = batches[b];
    if (batch.y.size() != m) {
      throw DataError("batch " + std::to_string(b) + " has " + std::to_string(batch.y.size()) +
                      " measurements, schedule expects " + std::to_string(m));
    }
    for (int k = 0; k < m; ++k) {
      out << b << ',' << k << ',' << schedule.order[static_cast<std::size_t>(k)] << ','
          << schedule.order[static_cast<std::size_t>(k) + 1] << ',' << format_double(batch.y[k])
          << ',';
      if (batch.has_delay_payload()) out << format_double(batch.delta_actual[k]);
      out << '\n';
    }
  }
}

std::vector<MeasurementBatch> read_measurements_csv(const std::filesystem::path& path,
                                                    const Schedule& schedule) {
  const int m = schedule.num_measurements();
  std::vector<MeasurementBatch> batches;
  std::vector<bool> has_delta_flags;
  read_schedule_csv(path, schedule, "batch,k,sender,next_sender,y_seconds,delta_actual_seconds",
                    false,
                    [&](int batch, int k, double y, bool has_delta, double delta, int line_no) {
                      if (k == 0) {
                        MeasurementBatch fresh;
                        fresh.y.resize(m);
                        fresh.delta_actual.resize(m);
                        batches.push_back(std::move(fresh));
                        has_delta_flags.push_back(has_delta);
                      }
                      if (has_delta != has_delta_flags.back()) {
                        row_error(path, line_no,
                                  "delay payload must be present for all rows of a batch or none");
                      }
                      batches[static_cast<std::size_t>(batch)].y[k] = y;
                      batches[static_cast<std::size_t>(batch)].delta_actual[k] = delta;
                    });
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (!has_delta_flags[b]) batches[b].delta_actual.resize(0);
  }
  return batches;
}

void write_calibrated_csv(const std::filesystem::path& path, const Schedule& schedule,
                          const std::vector<CalibratedRecord>& records) {
  std::ofstream out = open_output(path);
  out << "batch,k,sender,next_sender,y_cal_seconds,delta_used_seconds\n";
  const int m = schedule.num_measurements();
  for (std::size_t r = 0; r < records.size(); ++r) {
    const CalibratedRecord& rec = records[r];
    if (rec.y_cal.size() != m || rec.delta_used.size() != m) {
      throw DataError("calibrated record " + std::to_string(r) + " has wrong length");
    }
    for (int k = 0; k < m; ++k) {
      out << r << ',' << k << ',' << schedule.order[static_cast<std::size_t>(k)] << ','
          << schedule.order[static_cast<std::size_t>(k) + 1] << ','
          << format_double(rec.y_cal[k]) << ',' << format_double(rec.delta_used[k]) << '\n';
    }
  }
}

std::vector<CalibratedRecord> read_calibrated_csv(const std::filesystem::path& path,
                                                  const Schedule& schedule) {
  const int m = schedule.num_measurements();
  std::vector<CalibratedRecord> records;
  read_schedule_csv(path, schedule, "batch,k,sender,next_sender,y_cal_seconds,delta_used_seconds",
                    true,
                    [&](int batch, int k, double y, bool, double delta, int) {
                      if (k == 0) {
                        CalibratedRecord fresh;
                        fresh.batch = batch;
                        fresh.y_cal.resize(m);
                        fresh.delta_used.resize(m);
                        records.push_back(std::move(fresh));
                      }
                      records.back().y_cal[k] = y;
                      records.back().delta_used[k] = delta;
                    });
  return records;
}

void write_rls_trace_csv(const std::filesystem::path& path,
                         const std::vector<RlsTraceRow>& trace) {
  std::ofstream out = open_output(path);
  out << "n";
  const int n = trace.empty() ? 0 : static_cast<int>(trace.front().theta_hat.size());
  for (int i = 1; i <= n; ++i) out << ",theta_hat_" << i;
  out << ",trace_P\n";
  for (const RlsTraceRow& row : trace) {
    out << row.n;
    for (int i = 0; i < row.theta_hat.size(); ++i) out << ',' << format_double(row.theta_hat[i]);
    out << ',' << format_double(row.trace_p) << '\n';
  }
}

void write_rejections_csv(const std::filesystem::path& path,
                          const std::vector<RejectionRecord>& rejections) {
  std::ofstream out = open_output(path);
  out << "batch,rejected,max_abs_dev_ns\n";
  for (const RejectionRecord& r : rejections) {
    out << r.batch << ',' << (r.rejected ? 1 : 0) << ',' << format_double(r.max_abs_dev * 1e9)
        << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out = open_output(path);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::string ellipse_kind_name(EllipseKind kind) {
  switch (kind) {
    case EllipseKind::Hcrb:
      return "hcrb";
    case EllipseKind::Simulated:
      return "simulated";
    case EllipseKind::MapExperimental:
      return "map_experimental";
  }
  return "unknown";
}

std::string ellipse_json(const ErrorEllipse& ellipse, EllipseKind kind) {
  nlohmann::json j;
  j["center"] = {ellipse.center.x(), ellipse.center.y()};
  j["semi_axes"] = {ellipse.semi_major, ellipse.semi_minor};
  j["orientation_rad"] = ellipse.orientation;
  j["confidence"] = ellipse.confidence;
  j["kind"] = ellipse_kind_name(kind);
  return j.dump();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
}

}  // namespace schedloc
