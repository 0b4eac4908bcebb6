#pragma once

#include <atomic>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace dcqa {

struct Passage {
    std::string id;
    std::string text;
};

struct Table {
    std::string id;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Caption {
    std::string id;
    std::string caption;
};

/// Immutable id-keyed store for one modality. Every read bumps an access
/// counter so tests can prove a tool never touched another modality's data.
template <typename Item>
class ModalityStore {
public:
    ModalityStore() = default;
    explicit ModalityStore(std::vector<Item> items) : items_(std::move(items)) {
        for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i].id, i);
    }
    ModalityStore(const ModalityStore& o) : items_(o.items_), index_(o.index_) {}
    ModalityStore& operator=(const ModalityStore& o) {
        items_ = o.items_;
        index_ = o.index_;
        return *this;
    }

    /// Items restricted to `ids`, or all items when `ids` is empty.
    /// Unknown ids are skipped.
    std::vector<const Item*> scope(const std::vector<std::string>& ids) const {
        reads_.fetch_add(1, std::memory_order_relaxed);
        std::vector<const Item*> out;
        if (ids.empty()) {
            for (const auto& it : items_) out.push_back(&it);
            return out;
        }
        for (const auto& id : ids)
            if (auto f = index_.find(id); f != index_.end()) out.push_back(&items_[f->second]);
        return out;
    }

    const std::vector<Item>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    std::size_t reads() const { return reads_.load(std::memory_order_relaxed); }

private:
    std::vector<Item> items_;
    std::unordered_map<std::string, std::size_t> index_;
    mutable std::atomic<std::size_t> reads_{0};
};

using TextStore = ModalityStore<Passage>;
using TableStore = ModalityStore<Table>;
using CaptionStore = ModalityStore<Caption>;

// JSONL layouts: {id, text} / {id, header, rows} / {id, caption}.
TextStore load_text_store(const std::string& path);
TableStore load_table_store(const std::string& path);
CaptionStore load_caption_store(const std::string& path);

nlohmann::json to_json(const Passage& p);
nlohmann::json to_json(const Table& t);
nlohmann::json to_json(const Caption& c);

}  // namespace dcqa
