#pragma once

#include "sdfforge/bench.hpp"
#include "sdfforge/image.hpp"
#include "support.hpp"

namespace testing {

// Minimal artifact root: three NFS items, two TCV items, one dataset record
// and the PNGs they reference.
inline void write_review_root(const fs::path& root) {
  using nlohmann::json;
  auto frame = [](int i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "frames/v000/%06d.png", i);
    return std::string(buf);
  };
  fs::create_directories(root / "frames/v000");
  fs::create_directories(root / "bench");
  for (int i = 1; i <= 12; ++i) {
    sdfforge::write_png(root / frame(i), sdfforge::Image({4, 4}, {static_cast<std::uint8_t>(i * 10), 0, 0}));
  }
  std::vector<json> nfs, tcv;
  for (int k = 0; k < 3; ++k) {
    const int s = k < 2 ? 2 : 4;
    nfs.push_back({{"id", "nfs-v000-s" + std::to_string(s) + "-00" + std::to_string(k)},
                   {"video", "v000"},
                   {"stride", s},
                   {"context", {frame(1), frame(2), frame(3), frame(4), frame(5)}},
                   {"context_idx", {1, 2, 3, 4, 5}},
                   {"options", {frame(6), frame(9), frame(10), frame(11)}},
                   {"answer", "A"}});
  }
  for (int k = 0; k < 2; ++k) {
    tcv.push_back({{"id", "tcv-v000-s2-00" + std::to_string(k)},
                   {"video", "v000"},
                   {"stride", 2},
                   {"frames", {frame(1), frame(2), frame(3), frame(4), frame(5)}},
                   {"label", k ? "corrupted" : "coherent"}});
  }
  sdfforge::write_jsonl(root / "bench/nfs.jsonl", nfs);
  sdfforge::write_jsonl(root / "bench/tcv.jsonl", tcv);
  spit(root / "dataset/nfs/sft-x/frame00_rgb.png", slurp(root / frame(1)));
  sdfforge::write_jsonl(root / "dataset/manifest.jsonl",
                        {{{"id", "sft-x"},
                          {"task", "nfs"},
                          {"frames", {{{"path", "nfs/sft-x/frame00_rgb.png"}, {"kind", "rgb"}}}},
                          {"candidates", json::array()},
                          {"answer", "A"}}});
}

}  // namespace testing
