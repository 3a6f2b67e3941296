//! Public attribute names of the builtin types (CPython 3.10 `dir()` without
//! dunders). A method call on a builtin receiver that names something outside
//! its list cannot succeed at run time.

use crate::types::{Ctor, Elem, PyType};

const STR: &[&str] = &[
    "capitalize", "casefold", "center", "count", "encode", "endswith", "expandtabs", "find",
    "format", "format_map", "index", "isalnum", "isalpha", "isascii", "isdecimal", "isdigit",
    "isidentifier", "islower", "isnumeric", "isprintable", "isspace", "istitle", "isupper",
    "join", "ljust", "lower", "lstrip", "maketrans", "partition", "removeprefix",
    "removesuffix", "replace", "rfind", "rindex", "rjust", "rpartition", "rsplit", "rstrip",
    "split", "splitlines", "startswith", "strip", "swapcase", "title", "translate", "upper",
    "zfill",
];

const BYTES: &[&str] = &[
    "capitalize", "center", "count", "decode", "endswith", "expandtabs", "find", "fromhex",
    "hex", "index", "isalnum", "isalpha", "isascii", "isdigit", "islower", "isspace",
    "istitle", "isupper", "join", "ljust", "lower", "lstrip", "maketrans", "partition",
    "removeprefix", "removesuffix", "replace", "rfind", "rindex", "rjust", "rpartition",
    "rsplit", "rstrip", "split", "splitlines", "startswith", "strip", "swapcase", "title",
    "translate", "upper", "zfill",
];

const LIST: &[&str] = &[
    "append", "clear", "copy", "count", "extend", "index", "insert", "pop", "remove",
    "reverse", "sort",
];

const DICT: &[&str] = &[
    "clear", "copy", "fromkeys", "get", "items", "keys", "pop", "popitem", "setdefault",
    "update", "values",
];

const SET: &[&str] = &[
    "add", "clear", "copy", "difference", "difference_update", "discard", "intersection",
    "intersection_update", "isdisjoint", "issubset", "issuperset", "pop", "remove",
    "symmetric_difference", "symmetric_difference_update", "union", "update",
];

const TUPLE: &[&str] = &["count", "index"];

const INT: &[&str] = &[
    "as_integer_ratio", "bit_count", "bit_length", "conjugate", "denominator", "from_bytes",
    "imag", "numerator", "real", "to_bytes",
];

const FLOAT: &[&str] = &[
    "as_integer_ratio", "conjugate", "fromhex", "hex", "imag", "is_integer", "real",
];

const GENERATOR: &[&str] = &["close", "gi_code", "gi_frame", "gi_running", "gi_yieldfrom", "send", "throw"];

/// Runtime name of a builtin type, used as the stub prefix for its methods.
pub fn builtin_name(t: &PyType) -> Option<&'static str> {
    Some(match t {
        PyType::Elementary(e) => e.name(),
        PyType::Generic(Ctor::List, _) => "list",
        PyType::Generic(Ctor::Dict, _) => "dict",
        PyType::Generic(Ctor::Set, _) => "set",
        PyType::Generic(Ctor::Tuple, _) => "tuple",
        PyType::Generic(Ctor::Generator, _) => "generator",
        PyType::Generic(Ctor::Callable, _) => "function",
        PyType::NoneType => "NoneType",
        _ => return None,
    })
}

/// Attribute names of a builtin type, or `None` when `t` is not a builtin
/// with a closed attribute set.
pub fn members_of(t: &PyType) -> Option<&'static [&'static str]> {
    Some(match t {
        PyType::Elementary(Elem::Str) => STR,
        PyType::Elementary(Elem::Bytes) => BYTES,
        // bool exposes exactly the int attributes.
        PyType::Elementary(Elem::Int | Elem::Bool) => INT,
        PyType::Elementary(Elem::Float) => FLOAT,
        PyType::Generic(Ctor::List, _) => LIST,
        PyType::Generic(Ctor::Dict, _) => DICT,
        PyType::Generic(Ctor::Set, _) => SET,
        PyType::Generic(Ctor::Tuple, _) => TUPLE,
        PyType::Generic(Ctor::Generator, _) => GENERATOR,
        PyType::NoneType => &[],
        _ => return None,
    })
}
