#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "linetrack/image.hpp"

namespace testutil {

/// Scratch directory removed on scope exit.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("linetrack_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

  private:
    std::filesystem::path path_;
};

inline linetrack::GrayImage random_image(std::mt19937& rng, int w, int h) {
    linetrack::GrayImage img(w, h);
    std::uniform_int_distribution<int> dist(0, 255);
    for (auto& px : img.data) px = static_cast<std::uint8_t>(dist(rng));
    return img;
}

}  // namespace testutil
