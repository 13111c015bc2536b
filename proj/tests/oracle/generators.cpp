#include "generators.hpp"

namespace oracle {

History random_history(std::mt19937_64& rng, const RandomShape& shape) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  struct Outstanding {
    bool any = false;
    bool write = false;
    std::uint64_t block = 0;
  };
  std::vector<Outstanding> out(shape.threads);
  std::vector<std::vector<std::uint64_t>> written(shape.blocks);
  std::uint64_t next_value = 1;
  History h;
  while (static_cast<int>(h.size()) < shape.events) {
    if (u(rng) < shape.crash_p) {
      h.push(Event::crash());
      for (auto& o : out) o.any = false;
      continue;
    }
    const auto t = static_cast<std::uint32_t>(pick(shape.threads));
    Outstanding& o = out[t];
    if (o.any) {
      if (o.write) {
        h.push(Event::write_res(t, o.block));
      } else {
        const auto& vals = written[o.block];
        std::uint64_t v = 0;
        if (u(rng) < shape.fresh_read_p) {
          v = vals.back();
        } else {
          const std::size_t k = pick(vals.size() + 1);
          v = k == vals.size() ? 0 : vals[k];
        }
        h.push(Event::read_res(t, o.block, v));
      }
      o.any = false;
      continue;
    }
    const auto b = static_cast<std::uint64_t>(pick(shape.blocks));
    if (!written[b].empty() && u(rng) < shape.read_p) {
      h.push(Event::read_inv(t, b));
      o = {true, false, b};
    } else {
      SyncFlags s = SyncFlags::kNone;
      if (u(rng) < shape.flag_p) s = static_cast<SyncFlags>(1 + pick(3));
      written[b].push_back(next_value);
      h.push(Event::write_inv(t, b, next_value++, s));
      o = {true, true, b};
    }
  }
  return h;
}

}  // namespace oracle
