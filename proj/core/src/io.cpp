#include "socialgrad/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace socialgrad {

namespace {

nlohmann::json to_json_array(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v[i]);
}

void write_indexed_header(std::ostream& os, const char* prefix, Eigen::Index n) {
  for (Eigen::Index i = 1; i <= n; ++i) os << ',' << prefix << i;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_flow_csv(std::ostream& os, const FlowRecord& rec) {
  const Eigen::Index n = rec.samples.empty() ? 0 : rec.samples.front().p.size();
  os << 't';
  write_indexed_header(os, "p_", n);
  write_indexed_header(os, "xstar_", n);
  os << ",V,grad_norm,dist_to_pdagger\n";
  for (const FlowSample& s : rec.samples) {
    os << format_double(s.t);
    write_vector(os, s.p);
    write_vector(os, s.x_star);
    os << ',' << format_double(s.V) << ',' << format_double(s.grad_norm) << ','
       << format_double(s.dist_to_pdagger) << '\n';
  }
}

nlohmann::json flow_to_json(const FlowRecord& rec) {
  nlohmann::json j;
  j["final_time"] = rec.final_time;
  j["stopped_early"] = rec.stopped_early;
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const FlowSample& s : rec.samples) {
    samples.push_back({{"t", s.t},
                       {"p", to_json_array(s.p)},
                       {"xstar", to_json_array(s.x_star)},
                       {"V", s.V},
                       {"grad_norm", s.grad_norm},
                       {"dist_to_pdagger", s.dist_to_pdagger}});
  }
  return j;
}

void write_ttsa_csv(std::ostream& os, const TtsaRecord& rec) {
  const Eigen::Index n = rec.samples.empty() ? 0 : rec.samples.front().x.size();
  os << 'k';
  write_indexed_header(os, "x_", n);
  write_indexed_header(os, "p_", n);
  os << ",tracking_error,incentive_error,V,indicator_accepted,xi_norm\n";
  for (const TtsaSample& s : rec.samples) {
    os << s.k;
    write_vector(os, s.x);
    write_vector(os, s.p);
    os << ',' << format_double(s.tracking_error) << ',' << format_double(s.incentive_error) << ','
       << format_double(s.V) << ',' << (s.indicator_accepted ? 1 : 0) << ',' << format_double(s.xi_norm)
       << '\n';
  }
}

nlohmann::json ttsa_config_to_json(const TtsaConfig& cfg) {
  return {{"schedule",
           {{"a0", cfg.schedule.a0},
            {"a_exp", cfg.schedule.a_exp},
            {"b0", cfg.schedule.b0},
            {"b_exp", cfg.schedule.b_exp},
            {"offset", cfg.schedule.offset}}},
          {"rule",
           {{"kind", std::string(to_string(cfg.rule.kind))},
            {"eta", cfg.rule.eta},
            {"certificate_rate", cfg.rule.certificate.rate}}},
          {"c_fraction", cfg.c_fraction},
          {"max_iter", cfg.max_iter},
          {"record_every", cfg.record_every},
          {"seed", cfg.seed},
          {"enforce_schedule", cfg.enforce_schedule}};
}

nlohmann::json ttsa_to_json(const TtsaRecord& rec, const TtsaConfig& cfg) {
  nlohmann::json j;
  j["config"] = ttsa_config_to_json(cfg);
  const auto& s = rec.summary;
  j["summary"] = {{"final_tracking_error", s.final_tracking_error},
                  {"final_incentive_error", s.final_incentive_error},
                  {"tail_acceptance", s.tail_acceptance},
                  {"accepted_mass", s.accepted_mass},
                  {"accepted_steps", s.accepted_steps},
                  {"last_rejected_step", s.last_rejected_step}};
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const TtsaSample& t : rec.samples) {
    samples.push_back({{"k", t.k},
                       {"x", to_json_array(t.x)},
                       {"p", to_json_array(t.p)},
                       {"tracking_error", t.tracking_error},
                       {"incentive_error", t.incentive_error},
                       {"V", t.V},
                       {"indicator_accepted", t.indicator_accepted},
                       {"xi_norm", t.xi_norm}});
  }
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace socialgrad
