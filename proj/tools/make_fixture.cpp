// Regenerates data/synthetic_flows.csv, the 2000-row CI fixture. The file
// is committed; rerun this only when the schema changes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kldetect/csv.hpp"
#include "kldetect/rng.hpp"

using kldetect::Rng;

namespace {

constexpr uint64_t kFixtureSeed = 20240901;

struct FlowRow {
  std::vector<std::string> cells;
  bool keylogger = false;
};

std::string fmt(double v) {
  // fixture values rounded to 4 decimals to keep the file small
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double lognormal(Rng& rng, double mu, double sigma) {
  return std::exp(mu + sigma * rng.gaussian());
}

double positive_normal(Rng& rng, double mu, double sigma) {
  return std::abs(mu + sigma * rng.gaussian());
}

FlowRow make_row(Rng& rng, size_t index, bool keylogger) {
  const int common_ports[] = {80, 443, 53, 8080, 22, 123};
  const int exfil_ports[] = {4444, 5555, 6667, 8081};

  int dst_port;
  if (keylogger) {
    if (rng.uniform() < 0.15) {
      dst_port = common_ports[rng.uniform_index(6)];
    } else if (rng.uniform() < 0.4) {
      dst_port = exfil_ports[rng.uniform_index(4)];
    } else {
      dst_port = 1024 + static_cast<int>(rng.uniform_index(64511));
    }
  } else {
    if (rng.uniform() < 0.85) {
      dst_port = common_ports[rng.uniform_index(6)];
    } else {
      dst_port = 1024 + static_cast<int>(rng.uniform_index(48000));
    }
  }

  double duration = keylogger ? lognormal(rng, 13.2, 0.9) : lognormal(rng, 12.0, 1.4);
  double tot_fwd_pkts = 1 + rng.uniform_index(60);
  double tot_bwd_pkts = 1 + rng.uniform_index(50);
  double fwd_len_mean = positive_normal(rng, 220, 90);
  double bwd_len_mean = positive_normal(rng, 300, 120);
  double totlen_fwd = tot_fwd_pkts * fwd_len_mean;
  double totlen_bwd = tot_bwd_pkts * bwd_len_mean;

  double fwd_pkt_len_max = keylogger ? positive_normal(rng, 820, 220) : positive_normal(rng, 540, 230);
  double fwd_pkt_len_std = keylogger ? positive_normal(rng, 110, 30) : positive_normal(rng, 42, 16);
  double bwd_pkt_len_max = keylogger ? positive_normal(rng, 1180, 300) : positive_normal(rng, 610, 260);
  double bwd_pkt_len_min = positive_normal(rng, 45, 25);

  double flow_byts_s = (totlen_fwd + totlen_bwd) / (duration / 1e6);
  double flow_pkts_s = (tot_fwd_pkts + tot_bwd_pkts) / (duration / 1e6);

  double flow_iat_mean = keylogger ? lognormal(rng, 11.0, 0.7) : lognormal(rng, 9.0, 1.2);
  double flow_iat_std = lognormal(rng, 8.5, 1.0);
  double fwd_iat_mean = lognormal(rng, 9.5, 1.1);

  double pkt_len_min = keylogger ? (rng.uniform() < 0.6 ? 0.0 : positive_normal(rng, 20, 12))
                                 : positive_normal(rng, 38, 18);
  double pkt_len_std = 0.5 * (fwd_pkt_len_std + positive_normal(rng, 60, 25));
  double subflow_bwd_byts = keylogger ? lognormal(rng, 7.5, 0.8) : lognormal(rng, 6.0, 1.0);

  const int win_sizes[] = {8192, 16384, 29200, 65535};
  double init_fwd_win = win_sizes[rng.uniform_index(4)];
  double active_mean = lognormal(rng, 10.0, 1.5);

  FlowRow row;
  row.keylogger = keylogger;
  auto& c = row.cells;
  c.push_back(std::to_string(index));                          // Unnamed: 0
  c.push_back("192.168.1." + std::to_string(2 + index % 50) + "-10.0.0." +
              std::to_string(2 + index % 20) + "-" + std::to_string(dst_port));  // Flow ID
  c.push_back("192.168.1." + std::to_string(2 + index % 50));  // Source IP
  c.push_back("10.0.0." + std::to_string(2 + index % 20));     // Destination IP
  {
    char ts[40];
    std::snprintf(ts, sizeof(ts), "2021-03-%02zu 10:%02zu:%02zu", 1 + index % 28, index % 60,
                  (index * 7) % 60);
    c.push_back(ts);  // Timestamp
  }
  c.push_back(std::to_string(dst_port));
  c.push_back(fmt(duration));
  c.push_back(fmt(tot_fwd_pkts));
  c.push_back(fmt(tot_bwd_pkts));
  c.push_back(fmt(totlen_fwd));
  c.push_back(fmt(totlen_bwd));
  c.push_back(fmt(fwd_pkt_len_max));
  c.push_back(fmt(fwd_pkt_len_std));
  c.push_back(fmt(bwd_pkt_len_max));
  c.push_back(fmt(bwd_pkt_len_min));
  c.push_back(fmt(flow_byts_s));
  c.push_back(fmt(flow_pkts_s));
  c.push_back(fmt(flow_iat_mean));
  c.push_back(fmt(flow_iat_std));
  c.push_back(fmt(fwd_iat_mean));
  c.push_back(fmt(pkt_len_min));
  c.push_back(fmt(pkt_len_std));
  c.push_back(fmt(subflow_bwd_byts));
  c.push_back(fmt(init_fwd_win));
  c.push_back(fmt(active_mean));
  c.push_back(keylogger ? "Keylogger" : "Benign");
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_path = argc > 1 ? argv[1] : "data/synthetic_flows.csv";
  const size_t n_benign = 1400;
  const size_t n_keylogger = 600;

  Rng rng = Rng::derive(kFixtureSeed, "fixture");

  std::vector<bool> plan(n_benign + n_keylogger, false);
  std::fill(plan.begin() + n_benign, plan.end(), true);
  rng.shuffle(plan);

  std::vector<FlowRow> rows;
  rows.reserve(plan.size());
  for (size_t i = 0; i < plan.size(); ++i) rows.push_back(make_row(rng, i, plan[i]));

  // plant CICFlowMeter-style artifacts: Infinity in the rate columns and a
  // few missing cells (column offsets 15/16 = Flow Byts/s, Flow Pkts/s)
  Rng artifact_rng = Rng::derive(kFixtureSeed, "artifacts");
  for (int i = 0; i < 8; ++i) rows[artifact_rng.uniform_index(rows.size())].cells[15] = "Infinity";
  for (int i = 0; i < 4; ++i) rows[artifact_rng.uniform_index(rows.size())].cells[16] = "Infinity";
  for (int i = 0; i < 5; ++i) rows[artifact_rng.uniform_index(rows.size())].cells[13] = "NaN";
  for (int i = 0; i < 3; ++i) rows[artifact_rng.uniform_index(rows.size())].cells[21] = "";

  std::ofstream out(out_path, std::ios::binary);
  if (!out.good()) {
    std::cerr << "cannot open " << out_path << "\n";
    return 1;
  }
  out << "Unnamed: 0,Flow ID,Source IP,Destination IP,Timestamp,"
         "Dst Port,Flow Duration,Tot Fwd Pkts,Tot Bwd Pkts,TotLen Fwd Pkts,"
         "TotLen Bwd Pkts,Fwd Pkt Len Max,Fwd Pkt Len Std,Bwd Pkt Len Max,"
         "Bwd Pkt Len Min,Flow Byts/s,Flow Pkts/s,Flow IAT Mean,Flow IAT Std,"
         "Fwd IAT Mean,Pkt Len Min,Pkt Len Std,Subflow Bwd Byts,"
         "Init Fwd Win Byts,Active Mean,Class\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.cells.size(); ++i) {
      if (i) out << ',';
      out << kldetect::csv_escape(row.cells[i]);
    }
    out << '\n';
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}
