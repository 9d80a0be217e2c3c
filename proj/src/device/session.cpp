#include "avs/device/session.hpp"

#include <algorithm>
#include <cmath>

#include "avs/core/errors.hpp"

namespace avs::device {

core::SecretKey disk_key(const std::string& disk_id, std::uint64_t seed) {
    return core::derive_key("disk/" + disk_id, seed);
}

SessionResult run_session(const SessionSpec& spec, double duration_s, std::vector<ButtonEvent> scenario,
                          std::uint64_t seed) {
    if (!(duration_s > 0) || !std::isfinite(duration_s)) throw ValidationError("duration", "must be positive");
    if (!(spec.tick_s > 0)) throw ValidationError("tick_s", "must be positive");
    const std::int64_t duration_ms = std::llround(duration_s * 1000.0);
    const std::int64_t tick_ms = std::max<std::int64_t>(1, std::llround(spec.tick_s * 1000.0));
    for (const auto& e : scenario)
        if (!(e.at_s >= 0) || e.at_s > duration_s) throw ValidationError("scenario", "event outside session");
    std::stable_sort(scenario.begin(), scenario.end(),
                     [](const ButtonEvent& a, const ButtonEvent& b) { return a.at_s < b.at_s; });

    DeviceConfig cfg = spec.device;
    cfg.seed = seed;
    const core::SecretKey key = disk_key(spec.disk_id, seed);
    Device dev(cfg, EncryptedDisk(spec.disk_id, spec.disk_capacity_bytes, spec.disk_id, key),
               BatteryModel(spec.battery_hours));
    dev.configure(spec.subject_id, spec.ward_id, spec.device_id, spec.session_id);
    dev.press_power();

    std::int64_t t = 0;
    std::size_t next_event = 0;
    bool stopped = false;
    while (!stopped) {
        while (next_event < scenario.size() && std::llround(scenario[next_event].at_s * 1000.0) <= t) {
            if (scenario[next_event++].kind == ButtonEvent::Kind::power) {
                stopped = true;
                break;
            }
            dev.press_privacy();
        }
        if (stopped || t >= duration_ms) break;
        std::int64_t step = std::min(tick_ms, duration_ms - t);
        if (next_event < scenario.size())
            step = std::min<std::int64_t>(step, std::llround(scenario[next_event].at_s * 1000.0) - t);
        dev.tick(static_cast<double>(step) / 1000.0);
        t += step;
    }
    dev.press_power();

    SessionResult r;
    r.manifest = *dev.last_manifest();
    r.keyring.add(spec.disk_id, key);
    const std::string spare_id = spec.disk_id + "-spare";
    EncryptedDisk spare(spare_id, spec.disk_capacity_bytes, spare_id, disk_key(spare_id, seed));
    r.disk = dev.swap_disk(std::move(spare));
    return r;
}

}  // namespace avs::device
