#pragma once

// File-per-learner document store. Each record is written to a temporary
// sibling and renamed into place, so readers never observe a partial file.

#include <simtutor/errors.hpp>
#include <simtutor/learner.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <system_error>

namespace simtutor {

class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create data directory " + dir_.string());
  }

  const std::filesystem::path& directory() const { return dir_; }

  void save(const LearnerModel& model) {
    if (!detail::valid_id(model.learner_id))
      throw Error(ErrorCode::Storage, "invalid learner id '" + model.learner_id + "'");
    std::lock_guard lock(lock_for(model.learner_id));
    const auto target = path_for(model.learner_id);
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(ErrorCode::Storage, "cannot write " + tmp.string());
      out << to_json(model).dump(2) << '\n';
      out.flush();
      if (!out) throw Error(ErrorCode::Storage, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot commit " + target.string() + ": " + ec.message());
  }

  LearnerModel load(const std::string& learner_id) {
    if (!detail::valid_id(learner_id))
      throw Error(ErrorCode::NotFound, "no learner '" + learner_id + "'", learner_id);
    std::lock_guard lock(lock_for(learner_id));
    std::ifstream in(path_for(learner_id));
    if (!in) throw Error(ErrorCode::NotFound, "no learner '" + learner_id + "'", learner_id);
    try {
      return learner_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Storage, "corrupt record for '" + learner_id + "': " + e.what());
    }
  }

  bool exists(const std::string& learner_id) const {
    return detail::valid_id(learner_id) && std::filesystem::exists(path_for(learner_id));
  }

 private:
  std::filesystem::path path_for(const std::string& id) const { return dir_ / (id + ".json"); }

  std::mutex& lock_for(const std::string& id) {
    std::lock_guard guard(table_mutex_);
    auto& slot = locks_[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  std::filesystem::path dir_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace simtutor
