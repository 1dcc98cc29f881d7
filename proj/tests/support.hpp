#ifndef INCI_TESTS_SUPPORT_HPP
#define INCI_TESTS_SUPPORT_HPP

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unistd.h>

#include "inci/corpus.hpp"
#include "inci/utf8.hpp"

namespace testing {

using namespace inci;

// Lesion covering the nth occurrence of `surface` in `text` (ASCII or UTF-8).
inline LesionFinding lesion(const std::string& text, const std::string& surface, const std::string& id,
                            Anatomy anatomy, std::optional<IncidentalomaLabel> gold = IncidentalomaLabel::None,
                            Assertion assertion = Assertion::Present, SizeTrend trend = SizeTrend::Absent,
                            int nth = 0) {
  std::size_t pos = text.find(surface);
  for (int i = 0; i < nth && pos != std::string::npos; ++i) pos = text.find(surface, pos + 1);
  if (pos == std::string::npos) throw std::logic_error("surface not in text: " + surface);
  LesionFinding l;
  l.lesion_id = id;
  l.span_start = utf8::length(std::string_view(text).substr(0, pos));
  l.span_end = l.span_start + utf8::length(surface);
  l.surface = surface;
  l.anatomy = anatomy;
  l.assertion = assertion;
  l.size_trend = trend;
  l.gold_label = gold;
  return l;
}

inline RadiologyReport report(std::string id, std::string text) {
  RadiologyReport r;
  r.report_id = std::move(id);
  r.text = std::move(text);
  return r;
}

// Unique scratch path, removed on destruction.
class TempPath {
 public:
  explicit TempPath(std::string_view stem) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("inci_" + std::string(stem) + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  }
  ~TempPath() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempPath(const TempPath&) = delete;
  TempPath& operator=(const TempPath&) = delete;

  const std::filesystem::path& path() const { return path_; }
  operator const std::filesystem::path&() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

#endif
