#include "pnpeval/metrics.hpp"

#include <cstdio>

namespace pnpeval::metrics {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_header() { return "method,p,N,nmc,pps_mmd,pps_mmd_null95,pps_fd,runtime_s,failures"; }

std::string csv_row(const EvalReport& r) {
  std::string row = r.method + "," + std::to_string(r.p) + "," + std::to_string(r.N) + ",";
  if (r.status == "ok") {
    row += format_number(r.nmc) + "," + format_number(r.pps_mmd) + "," +
           format_number(r.pps_mmd_null95) + "," + format_number(r.pps_fd) + ",";
  } else {
    for (int i = 0; i < 4; ++i) row += r.status + ",";
  }
  char rt[32];
  std::snprintf(rt, sizeof(rt), "%.3f", r.runtime_seconds);
  row += std::string(rt) + "," + std::to_string(r.failure_count);
  return row;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"method", r.method}, {"p", r.p}, {"N", r.N}, {"status", r.status},
                   {"runtime_s", r.runtime_seconds}, {"failures", r.failure_count}};
  if (r.status == "ok") {
    j["nmc"] = r.nmc;
    j["pps_mmd"] = r.pps_mmd;
    j["pps_mmd_null95"] = r.pps_mmd_null95;
    j["pps_mmd_p_value"] = r.pps_mmd_p_value;
    j["pps_fd"] = r.pps_fd;
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace pnpeval::metrics
