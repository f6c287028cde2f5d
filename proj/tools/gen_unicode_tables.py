#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from Python's unicodedata.

Emits three sorted tables used by text normalization:
  punctuation ranges (general categories Pc Pd Pe Pf Pi Po Ps),
  White_Space ranges,
  simple lowercase mappings (single code point to single code point).
"""
import sys
import unicodedata

PUNCT = {"Pc", "Pd", "Pe", "Pf", "Pi", "Po", "Ps"}
# White_Space property (PropList.txt); str.isspace also accepts U+001C..U+001F.
WHITE_SPACE = [0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85, 0xA0, 0x1680,
               *range(0x2000, 0x200B), 0x2028, 0x2029, 0x202F, 0x205F, 0x3000]


def ranges(points):
    out = []
    for cp in points:
        if out and out[-1][1] + 1 == cp:
            out[-1][1] = cp
        else:
            out.append([cp, cp])
    return out


def main():
    punct = [cp for cp in range(0x110000) if unicodedata.category(chr(cp)) in PUNCT]
    lower = []
    for cp in range(0x110000):
        ch = chr(cp)
        lo = ch.lower()
        if lo != ch:
            if len(lo) == 1:
                lower.append((cp, ord(lo)))
            else:
                # Full mapping expands (e.g. U+0130); keep the simple mapping's first code point.
                lower.append((cp, ord(lo[0])))
    w = sys.stdout.write
    w("// Generated by tools/gen_unicode_tables.py (Unicode %s). Do not edit.\n" % unicodedata.unidata_version)
    w("// clang-format off\n")
    w("constexpr CodeRange kPunctuation[] = {\n")
    for a, b in ranges(punct):
        w("  {0x%04X, 0x%04X},\n" % (a, b))
    w("};\n\nconstexpr CodeRange kWhiteSpace[] = {\n")
    for a, b in ranges(WHITE_SPACE):
        w("  {0x%04X, 0x%04X},\n" % (a, b))
    w("};\n\nconstexpr CaseMapping kLowercase[] = {\n")
    for a, b in lower:
        w("  {0x%04X, 0x%04X},\n" % (a, b))
    w("};\n// clang-format on\n")


if __name__ == "__main__":
    main()
