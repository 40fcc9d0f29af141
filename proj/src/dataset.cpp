// Copyright 2026 The mtop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtop/dataset.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtop/error.hpp"

namespace mtop {

using nlohmann::json;

std::size_t Dataset::num_frames() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.frames.size();
  return n;
}

Normalizer fit_action_normalizer(const std::vector<Trajectory>& trajectories) {
  std::vector<Vec> rows;
  for (const auto& t : trajectories)
    for (const auto& f : t.frames) rows.push_back(f.action);
  return Normalizer::fit(rows);
}

Dataset generate_dataset(const RunConfig& cfg) {
  const EnvParams env = cfg.env_params();
  const std::uint64_t seed = cfg.count("seed");
  const std::uint64_t tasks = cfg.count("num_tasks");
  const std::uint64_t demos = cfg.count("demos_per_task");
  const double noise = cfg.real("demo_noise");
  Dataset ds;
  for (std::uint64_t j = 0; j < tasks; ++j) {
    const std::uint64_t task_seed = mix_seed(seed, kTagTask, j);
    Rng task_rng(task_seed);
    TaskSpec task = gen_task(task_rng, env, static_cast<InteractionKind>(j % kNumFamilies));
    task.seed = task_seed;
    for (std::uint64_t d = 0; d < demos; ++d) {
      Rng demo_rng(mix_seed(seed, kTagDemo, j, d));
      ds.trajectories.push_back(scripted_demo(task, demo_rng, noise, env));
      ds.task_ids.push_back(j);
    }
  }
  ds.normalizer = fit_action_normalizer(ds.trajectories);
  ds.config_text = cfg.serialize();
  return ds;
}

namespace {

json point_json(const Point& p) { return json::array({p[0], p[1]}); }

Point json_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("dataset: expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec json_vec(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n)
    throw IoError(std::string("dataset: field '") + what + "' has wrong length");
  Vec v;
  v.reserve(n);
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

}  // namespace

void write_dataset(const Dataset& ds, const RunConfig& cfg, const std::string& path) {
  std::ostringstream out;
  json header = {{"format", "mtop-dataset"},
                 {"version", kDatasetVersion},
                 {"config", cfg.values()},
                 {"config_digest", cfg.digest()},
                 {"num_tasks", cfg.count("num_tasks")},
                 {"demo_count", ds.trajectories.size()},
                 {"num_frames", ds.num_frames()},
                 {"action_dim", kActionDim},
                 {"normalizer", {{"mean", ds.normalizer.mean}, {"std", ds.normalizer.stddev}}}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Trajectory& tr = ds.trajectories[i];
    const TaskSpec& t = tr.task;
    json task = {{"record", "task"},
                 {"traj", i},
                 {"task", ds.task_ids[i]},
                 {"kind", interaction_name(t.interaction_kind)},
                 {"start", json::array({t.start_pose[0], t.start_pose[1], t.start_pose[2]})},
                 {"object", point_json(t.object_pose)},
                 {"goal", point_json(t.goal_pose)},
                 {"vicinity_radius", t.vicinity_radius},
                 {"success_tolerance", t.success_tolerance},
                 {"seed", t.seed},
                 {"frames", tr.frames.size()}};
    out << task.dump() << '\n';
    for (std::size_t k = 0; k < tr.frames.size(); ++k) {
      const TrajectoryFrame& f = tr.frames[k];
      json mask = json::array();
      for (bool b : f.context.token_mask) mask.push_back(b ? 1 : 0);
      json frame = {{"record", "frame"},
                    {"traj", i},
                    {"task", ds.task_ids[i]},
                    {"frame", k},
                    {"instruction", f.context.instruction},
                    {"observation", f.context.observation},
                    {"proprio", f.context.proprio},
                    {"mask", mask},
                    {"action", f.action},
                    {"label", phase_name(f.label)},
                    {"ee_speed", f.ee_speed}};
      out << frame.dump() << '\n';
    }
  }
  write_text_file(path, out.str());
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset " + path + " is empty");
  Dataset ds;
  std::size_t line_no = 1;
  auto parse = [&](const std::string& s) {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw IoError(path + ":" + std::to_string(line_no) + ": not a JSON object");
    return j;
  };
  try {
    const json h = parse(line);
    if (h.value("format", "") != "mtop-dataset") throw IoError(path + ": not an mtop dataset");
    if (h.value("version", 0) != kDatasetVersion)
      throw IoError(path + ": unsupported dataset version");
    ds.normalizer.mean = json_vec(h.at("normalizer").at("mean"), kActionDim, "normalizer.mean");
    ds.normalizer.stddev = json_vec(h.at("normalizer").at("std"), kActionDim, "normalizer.std");
    for (const auto& [k, v] : h.at("config").items()) ds.config_text += k + "=" + v.get<std::string>() + "\n";
    std::size_t expected_frames = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json r = parse(line);
      const std::string kind = r.at("record").get<std::string>();
      if (kind == "task") {
        if (!ds.trajectories.empty() && ds.trajectories.back().frames.size() != expected_frames)
          throw IoError(path + ":" + std::to_string(line_no) + ": previous trajectory truncated");
        if (r.at("traj").get<std::size_t>() != ds.trajectories.size())
          throw IoError(path + ":" + std::to_string(line_no) + ": trajectory out of order");
        Trajectory tr;
        TaskSpec& t = tr.task;
        const auto ik = parse_interaction(r.at("kind").get<std::string>());
        if (!ik) throw IoError(path + ":" + std::to_string(line_no) + ": unknown task kind");
        t.interaction_kind = *ik;
        const Vec start = json_vec(r.at("start"), 3, "start");
        t.start_pose = {start[0], start[1], start[2]};
        t.object_pose = json_point(r.at("object"));
        t.goal_pose = json_point(r.at("goal"));
        t.vicinity_radius = r.at("vicinity_radius").get<double>();
        t.success_tolerance = r.at("success_tolerance").get<double>();
        t.seed = r.at("seed").get<std::uint64_t>();
        t.task_code.assign(kInstructionDim, 0.0);
        t.task_code[static_cast<std::size_t>(t.interaction_kind)] = 1.0;
        expected_frames = r.at("frames").get<std::size_t>();
        ds.trajectories.push_back(std::move(tr));
        ds.task_ids.push_back(r.at("task").get<std::uint64_t>());
      } else if (kind == "frame") {
        if (ds.trajectories.empty() ||
            r.at("traj").get<std::size_t>() != ds.trajectories.size() - 1 ||
            r.at("frame").get<std::size_t>() != ds.trajectories.back().frames.size())
          throw IoError(path + ":" + std::to_string(line_no) + ": frame out of order");
        TrajectoryFrame f;
        f.context.instruction = json_vec(r.at("instruction"), kInstructionDim, "instruction");
        f.context.observation = json_vec(r.at("observation"), kObservationDim, "observation");
        f.context.proprio = json_vec(r.at("proprio"), kProprioDim, "proprio");
        const json& m = r.at("mask");
        if (!m.is_array() || m.size() != kNumTokenSlots) throw IoError(path + ": bad token mask");
        for (std::size_t s = 0; s < kNumTokenSlots; ++s) f.context.token_mask[s] = m[s].get<int>() != 0;
        f.action = json_vec(r.at("action"), kActionDim, "action");
        const auto y = parse_phase(r.at("label").get<std::string>());
        if (!y) throw IoError(path + ":" + std::to_string(line_no) + ": unknown label");
        f.label = *y;
        f.ee_speed = r.at("ee_speed").get<double>();
        ds.trajectories.back().frames.push_back(std::move(f));
      } else {
        throw IoError(path + ":" + std::to_string(line_no) + ": unknown record '" + kind + "'");
      }
    }
    if (!ds.trajectories.empty() && ds.trajectories.back().frames.size() != expected_frames)
      throw IoError(path + ": last trajectory truncated");
    if (ds.trajectories.size() != h.at("demo_count").get<std::size_t>())
      throw IoError(path + ": trajectory count does not match header");
  } catch (const json::exception& e) {
    throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
  }
  return ds;
}

LabelSet truth_labels(const Dataset& ds) {
  LabelSet out;
  for (const auto& t : ds.trajectories) out.emplace_back(t.labels());
  return out;
}

void write_labels(const LabelSet& labels, const RunConfig& cfg, const std::string& path) {
  std::string out = config_comment_block(cfg, "mtop-labels/" + std::to_string(kArtifactVersion));
  out += "traj,frame,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t k = 0; k < labels[i]->size(); ++k)
      out += std::to_string(i) + "," + std::to_string(k) + "," + phase_name((*labels[i])[k]) + "\n";
  }
  write_text_file(path, out);
}

LabelSet read_labels(const std::string& path, const Dataset& ds) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"traj", "frame", "label"})
    throw IoError(path + ": missing traj,frame,label header");
  LabelSet out(ds.trajectories.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3) throw IoError(path + ": malformed row " + std::to_string(r));
    std::size_t i = 0;
    std::size_t k = 0;
    try {
      i = std::stoul(row[0]);
      k = std::stoul(row[1]);
    } catch (const std::exception&) {
      throw IoError(path + ": non-numeric index in row " + std::to_string(r));
    }
    const auto y = parse_phase(row[2]);
    if (!y) throw IoError(path + ": unknown label '" + row[2] + "'");
    if (i >= out.size())
      throw ContractError(path + ": trajectory " + std::to_string(i) + " not in dataset");
    if (!out[i]) out[i].emplace();
    if (k != out[i]->size())
      throw ContractError(path + ": frames of trajectory " + std::to_string(i) + " out of order");
    out[i]->push_back(*y);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] && out[i]->size() != ds.trajectories[i].frames.size())
      throw ContractError(path + ": trajectory " + std::to_string(i) + " has " +
                          std::to_string(out[i]->size()) + " labels for " +
                          std::to_string(ds.trajectories[i].frames.size()) + " frames");
  return out;
}

TrainingSet build_training_set(const Dataset& ds, const LabelSet& labels, const PolicyDims& dims,
                               const Normalizer& norm) {
  if (labels.size() != ds.trajectories.size())
    throw ContractError("label set does not match dataset");
  TrainingSet ts;
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) n += ds.trajectories[i].frames.size();
  ts.contexts.reserve(n);  // examples keep pointers into this vector
  const std::size_t H = dims.horizon;
  const std::size_t d = dims.action_dim;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    const auto& frames = ds.trajectories[i].frames;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      ts.contexts.push_back(frames[k].context);
      TrainExample ex;
      ex.context = &ts.contexts.back();
      ex.action.assign(H * d, 0.0);
      ex.mask.assign(H * d, 0.0);
      for (std::size_t h = 0; h < H && k + h < frames.size(); ++h) {
        const Vec z = norm.normalize(frames[k + h].action);
        for (std::size_t j = 0; j < d; ++j) {
          ex.action[h * d + j] = z[j];
          ex.mask[h * d + j] = 1.0;
        }
      }
      ex.label = (*labels[i])[k];
      (ex.label == PhaseLabel::kMove ? ts.move_idx : ts.operate_idx).push_back(ts.examples.size());
      ts.examples.push_back(std::move(ex));
    }
  }
  return ts;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    row.push_back(std::move(cur));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_real(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

}  // namespace mtop
