#include "avs/device/device.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "avs/core/errors.hpp"
#include "avs/device/synthetic.hpp"

namespace avs::device {

using core::Channel;
using core::TimestampMs;

namespace {

constexpr double kEps = 1e-9;

std::uint64_t items_after(std::int64_t collected_ms, double rate) {
    return static_cast<std::uint64_t>(std::floor(static_cast<double>(collected_ms) * rate / 1000.0 + kEps));
}

std::int64_t start_ms_of(std::uint64_t k, double rate) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(k) * 1000.0 / rate + kEps));
}

}  // namespace

std::string_view to_string(DeviceState s) {
    switch (s) {
        case DeviceState::Off: return "Off";
        case DeviceState::Configured: return "Configured";
        case DeviceState::Collecting: return "Collecting";
        case DeviceState::PrivacyPaused: return "PrivacyPaused";
        case DeviceState::Finalizing: return "Finalizing";
    }
    return "?";
}

void DeviceConfig::validate() const {
    core::require_identifier("study_id", study_id);
    core::require_identifier("site_id", site_id);
    if (channels.empty()) throw ValidationError("channels", "at least one channel is required");
    std::set<Channel> seen;
    for (const auto& c : channels) {
        c.validate();
        if (!seen.insert(c.channel).second)
            throw ValidationError("channels", "duplicate channel " + std::string(core::to_string(c.channel)));
    }
}

BatteryModel::BatteryModel(double capacity_hours) {
    if (!(capacity_hours > 0) || !std::isfinite(capacity_hours))
        throw ValidationError("capacity_hours", "must be positive");
    capacity_ms_ = remaining_ms_ = std::llround(capacity_hours * 3.6e6);
}

void BatteryModel::drain(std::int64_t ms) { remaining_ms_ = std::max<std::int64_t>(0, remaining_ms_ - ms); }

Device::Device(DeviceConfig cfg, EncryptedDisk disk, BatteryModel battery)
    : cfg_(std::move(cfg)), disk_(std::move(disk)), battery_(battery), now_(cfg_.epoch) {
    cfg_.validate();
    if (disk_.sealed()) throw SealedError("cannot insert sealed disk " + disk_.disk_id());
    for (const auto& c : cfg_.channels) seeds_.push_back(channel_seed(cfg_.seed, c.channel));
}

void Device::require(std::initializer_list<DeviceState> allowed, std::string_view op) const {
    if (std::find(allowed.begin(), allowed.end(), state_) == allowed.end())
        throw StateError(std::string(op) + " not allowed in state " + std::string(to_string(state_)));
}

core::ObjectKey Device::key_for(Channel c, std::uint64_t seq) const {
    return {cfg_.study_id, cfg_.site_id, manifest_.subject_id, manifest_.session_id, c, core::Zone::raw, seq};
}

std::uint64_t Device::emitted(Channel c) const {
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i)
        if (cfg_.channels[i].channel == c) return channels_.empty() ? 0 : channels_[i].emitted;
    return 0;
}

void Device::configure(const std::string& subject_id, const std::string& ward_id, const std::string& device_id,
                       const std::string& session_id) {
    require({DeviceState::Off}, "configure");
    core::require_identifier("subject_id", subject_id);
    core::require_identifier("ward_id", ward_id);
    core::require_identifier("device_id", device_id);
    core::require_identifier("session_id", session_id);
    manifest_ = {};
    manifest_.study_id = cfg_.study_id;
    manifest_.site_id = cfg_.site_id;
    manifest_.subject_id = subject_id;
    manifest_.ward_id = ward_id;
    manifest_.device_id = device_id;
    manifest_.session_id = session_id;
    state_ = DeviceState::Configured;
}

void Device::press_power() {
    require({DeviceState::Configured, DeviceState::Collecting, DeviceState::PrivacyPaused, DeviceState::Finalizing},
            "press_power");
    if (state_ == DeviceState::Configured) {
        if (!disk_.has_key()) throw Error("disk " + disk_.disk_id() + " has no key attached");
        manifest_.disk_id = disk_.disk_id();
        manifest_.census = cfg_.mode == CaptureMode::census;
        manifest_.start_timestamp = now_;
        manifest_.channels.clear();
        manifest_.item_checksums.clear();
        manifest_.privacy_gaps.clear();
        for (const auto& c : cfg_.channels) {
            core::ChannelSummary s;
            s.width = c.payload_width;
            s.height = c.payload_height;
            s.samples_per_pixel = c.samples_per_pixel;
            s.bits_per_sample = c.bits_per_sample;
            manifest_.channels[c.channel] = s;
        }
        channels_.assign(cfg_.channels.size(), ChannelState{});
        open_gap_.reset();
        state_ = DeviceState::Collecting;
        return;
    }
    if (state_ != DeviceState::Finalizing) begin_finalize();
    finish_finalize();
}

void Device::press_privacy() {
    require({DeviceState::Collecting, DeviceState::PrivacyPaused}, "press_privacy");
    if (state_ == DeviceState::Collecting) {
        open_gap_ = now_;
        state_ = DeviceState::PrivacyPaused;
    } else {
        if (now_ > *open_gap_) manifest_.privacy_gaps.push_back({*open_gap_, now_});
        open_gap_.reset();
        state_ = DeviceState::Collecting;
    }
}

void Device::begin_finalize() {
    if (open_gap_) {
        if (now_ > *open_gap_) manifest_.privacy_gaps.push_back({*open_gap_, now_});
        open_gap_.reset();
    }
    manifest_.end_timestamp = now_;
    state_ = DeviceState::Finalizing;
}

void Device::finish_finalize() {
    std::vector<std::string> bad;
    for (const auto& e : manifest_.item_checksums) {
        try {
            if (core::digest(disk_.read(e.key)) != e.checksum) bad.push_back(e.key);
        } catch (const Error&) {
            bad.push_back(e.key);
        }
    }
    if (!bad.empty()) throw FinalizeError(std::move(bad));
    manifest_.validate();
    disk_.add_manifest(manifest_);
    last_manifest_ = manifest_;
    state_ = DeviceState::Off;
}

std::vector<core::DataItem> Device::tick(double dt_seconds) {
    require({DeviceState::Collecting, DeviceState::PrivacyPaused}, "tick");
    if (!(dt_seconds > 0) || !std::isfinite(dt_seconds)) throw ValidationError("dt", "must be positive");
    const std::int64_t dt_ms = std::llround(dt_seconds * 1000.0);
    if (dt_ms <= 0) throw ValidationError("dt", "must be at least 1 ms");
    if (battery_.remaining_ms() == 0) {
        begin_finalize();
        throw BatteryExhaustedError("battery exhausted");
    }
    const std::int64_t run_ms = std::min(dt_ms, battery_.remaining_ms());
    std::vector<core::DataItem> items = advance(run_ms);
    battery_.drain(run_ms);
    if (run_ms < dt_ms) {
        begin_finalize();
        throw BatteryExhaustedError("battery exhausted after " + std::to_string(run_ms) + " ms");
    }
    return items;
}

std::vector<core::DataItem> Device::advance(std::int64_t ms) {
    const bool paused = state_ == DeviceState::PrivacyPaused;
    const bool census = cfg_.mode == CaptureMode::census;
    const TimestampMs tick_start = now_;

    std::vector<ChannelState> next = channels_;
    std::vector<Pending> pending;
    std::uint64_t need = 0;
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
        const ChannelConfig& c = cfg_.channels[i];
        if (paused && c.pauses_with_privacy) continue;
        ChannelState& st = next[i];
        const std::int64_t before = st.collected_ms;
        st.collected_ms += ms;
        const std::uint64_t target = items_after(st.collected_ms, c.frame_rate);
        for (std::uint64_t k = st.emitted; k < target; ++k) {
            const TimestampMs ts = tick_start + std::max<std::int64_t>(0, start_ms_of(k, c.frame_rate) - before);
            if (census) {
                need += c.bytes_per_item;
            } else {
                Pending p{i, k, ts, render_payload(c, seeds_[i], k, ts)};
                need += EncryptedDisk::stored_size(p.payload.size());
                pending.push_back(std::move(p));
            }
        }
        st.emitted = std::max(st.emitted, target);
    }
    if (need > disk_.free_bytes()) throw DiskFullError("disk " + disk_.disk_id() + " is full");

    std::vector<core::DataItem> out;
    if (census) {
        disk_.reserve_census(need);
        for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
            const std::uint64_t n = next[i].emitted - channels_[i].emitted;
            if (n == 0) continue;
            auto& s = manifest_.channels[cfg_.channels[i].channel];
            if (s.item_count == 0) s.first_sequence = channels_[i].emitted;
            s.item_count += n;
            s.modeled_bytes += n * cfg_.channels[i].bytes_per_item;
            s.last_sequence = next[i].emitted - 1;
        }
    } else {
        out.reserve(pending.size());
        for (auto& p : pending) {
            const ChannelConfig& c = cfg_.channels[p.channel_index];
            core::DataItem item = core::DataItem::make(key_for(c.channel, p.sequence), p.timestamp, c.raw_format(),
                                                       std::move(p.payload));
            const std::string path = item.key.path();
            disk_.write(path, item.payload);
            auto& s = manifest_.channels[c.channel];
            if (s.item_count == 0) s.first_sequence = p.sequence;
            s.item_count += 1;
            s.byte_total += item.payload.size();
            s.modeled_bytes += c.bytes_per_item;
            s.last_sequence = p.sequence;
            manifest_.item_checksums.push_back({path, item.checksum, item.payload.size(), item.timestamp});
            out.push_back(std::move(item));
        }
    }
    channels_ = std::move(next);
    now_ += ms;
    return out;
}

EncryptedDisk Device::swap_disk(EncryptedDisk fresh) {
    require({DeviceState::Configured, DeviceState::Off}, "swap_disk");
    if (fresh.sealed()) throw SealedError("cannot insert sealed disk " + fresh.disk_id());
    EncryptedDisk removed = std::move(disk_);
    disk_ = std::move(fresh);
    removed.seal();
    return removed;
}

BatteryModel Device::swap_battery(BatteryModel fresh) {
    require({DeviceState::Configured, DeviceState::Off, DeviceState::Finalizing}, "swap_battery");
    BatteryModel removed = battery_;
    battery_ = fresh;
    return removed;
}

}  // namespace avs::device
