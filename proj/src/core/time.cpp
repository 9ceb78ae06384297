#include "homethru/time.hpp"

#include <charconv>
#include <fmt/format.h>

#include "homethru/errors.hpp"

namespace homethru {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    int digits(std::size_t count) {
        if (pos_ + count > text_.size()) fail();
        int value = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const char c = text_[pos_ + i];
            if (c < '0' || c > '9') fail();
            value = value * 10 + (c - '0');
        }
        pos_ += count;
        return value;
    }

    void expect(char c) {
        if (!accept(c)) fail();
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool at_digit() const { return pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9'; }
    bool done() const { return pos_ == text_.size(); }

    char next() {
        if (pos_ >= text_.size()) fail();
        return text_[pos_++];
    }

    [[noreturn]] void fail() const {
        throw InvalidArgument(fmt::format("malformed RFC 3339 timestamp: '{}'", text_));
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
    using namespace std::chrono;
    Cursor in(text);
    const int y = in.digits(4);
    in.expect('-');
    const int mo = in.digits(2);
    in.expect('-');
    const int d = in.digits(2);
    const char sep = in.next();
    if (sep != 'T' && sep != 't' && sep != ' ') in.fail();
    const int h = in.digits(2);
    in.expect(':');
    const int mi = in.digits(2);
    in.expect(':');
    const int s = in.digits(2);

    int millis = 0;
    if (in.accept('.')) {
        if (!in.at_digit()) in.fail();
        int scale = 100;
        while (in.at_digit()) {
            const int digit = in.digits(1);
            millis += digit * scale;
            scale /= 10;
        }
    }

    int offset_minutes = 0;
    const char zone = in.next();
    if (zone == 'Z' || zone == 'z') {
    } else if (zone == '+' || zone == '-') {
        const int oh = in.digits(2);
        in.expect(':');
        const int om = in.digits(2);
        if (oh > 23 || om > 59) in.fail();
        offset_minutes = (oh * 60 + om) * (zone == '-' ? -1 : 1);
    } else {
        in.fail();
    }
    if (!in.done()) in.fail();

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    // Leap seconds (":60") are not representable in sys_time.
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) in.fail();

    const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{millis};
    return time_point_cast<milliseconds>(local - minutes{offset_minutes});
}

std::string format_rfc3339(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss<milliseconds> tod{t - day_point};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       tod.hours().count(), tod.minutes().count(), tod.seconds().count(),
                       tod.subseconds().count());
}

Timestamp now_utc() {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

}  // namespace homethru
