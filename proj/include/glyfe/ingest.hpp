#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "glyfe/core.hpp"

namespace glyfe::ingest {

// Column layout of a patient CSV file. timestamp_format is either "epoch"
// (integer seconds) or a strftime-style pattern read in the record's UTC
// offset.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string glucose_column = "glucose";
  std::string cho_column = "cho";
  std::string insulin_column = "insulin";
  std::string timestamp_format = "epoch";
  std::int64_t step = kCgmStep;
  std::int64_t utc_offset = 0;

  void validate() const;
};

struct OhioOptions {
  std::string timestamp_format = "%d-%m-%Y %H:%M:%S";
  bool bolus_only = false;  // otherwise basal rates are integrated in
  std::int64_t utc_offset = 0;
};

PatientRecord parse_ohio_xml(std::string_view bytes, const OhioOptions& options = {});

PatientRecord parse_csv(std::string_view bytes, const CsvSchema& schema,
                        std::string patient_id = "csv");

// Canonical form: header line, one row per slot, shortest round-trip
// number formatting, empty glucose cell for missing readings.
std::string write_csv(const PatientRecord& record, const CsvSchema& schema = {});

PatientRecord read_csv_file(const std::filesystem::path& path, const CsvSchema& schema);
PatientRecord read_ohio_file(const std::filesystem::path& path, const OhioOptions& options = {});

Timestamp parse_timestamp(std::string_view text, const std::string& format,
                          std::int64_t utc_offset = 0);
std::string format_timestamp(Timestamp t, const std::string& format, std::int64_t utc_offset = 0);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
double parse_number(std::string_view text);  // throws FormatError

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace glyfe::ingest
