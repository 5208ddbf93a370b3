#pragma once

#include <stdexcept>
#include <string>

namespace ose {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define OSE_DEFINE_ERROR(Name)                  \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

OSE_DEFINE_ERROR(InvalidArgument);
OSE_DEFINE_ERROR(DimensionMismatch);
OSE_DEFINE_ERROR(RankDeficient);
OSE_DEFINE_ERROR(NotOrthonormal);
OSE_DEFINE_ERROR(EpsTooLarge);
OSE_DEFINE_ERROR(RetriesExhausted);
OSE_DEFINE_ERROR(IndexOutOfRange);
OSE_DEFINE_ERROR(LengthMismatch);
OSE_DEFINE_ERROR(NoLevelFound);
OSE_DEFINE_ERROR(NoValidColumns);
OSE_DEFINE_ERROR(NoClassifiedRows);
OSE_DEFINE_ERROR(NoBracket);
OSE_DEFINE_ERROR(ParseError);
OSE_DEFINE_ERROR(IoError);

/// A proven combinatorial statement failed on concrete input. Reaching this
/// means a bug in the implementation, never a property of the input.
OSE_DEFINE_ERROR(LemmaViolated);

#undef OSE_DEFINE_ERROR

namespace detail {

template <class E>
inline void require(bool cond, const std::string& what) {
    if (!cond) throw E(what);
}

} // namespace detail
} // namespace ose
