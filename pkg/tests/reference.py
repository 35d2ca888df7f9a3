"""Independent reference data for oracle checks."""

# Alignment in bytes per primitive: (32-bit target, 64-bit target).
REFERENCE_ALIGN = {
    "bool": (1, 1), "char": (4, 4), "str": (1, 1),
    "u8": (1, 1), "i8": (1, 1), "u16": (2, 2), "i16": (2, 2),
    "u32": (4, 4), "i32": (4, 4), "f32": (4, 4),
    "u64": (8, 8), "i64": (8, 8), "f64": (8, 8),
    "u128": (16, 16), "i128": (16, 16),
    "usize": (4, 8), "isize": (4, 8),
}

STRICT = {"bool", "char", "str"}
