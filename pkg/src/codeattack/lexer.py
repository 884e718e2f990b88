"""Source tokenizers for Java, C#, Python, and PHP.

Every lexed token carries one of four classes (keyword / identifier /
operator / argument) and an exact byte span into the original source, so a
token sequence plus the source reconstructs the input byte-for-byte.
Comments and whitespace are trivia: they live in the gaps between spans and
survive round-trips, but they are never attackable tokens.

Keyword and multi-character operator tables are shipped as data files under
``codeattack/data`` (one entry per line, ``#`` comments).
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import LexError, UnsupportedLanguage
from .validation import check_language

logger = logging.getLogger(__name__)

# The fixed operator alphabet counted by operator_multiset. Multi-character
# operators ("==", "++") contribute one count per constituent symbol.
OPERATOR_ALPHABET = "{}()[]+*/-%;.=<>!&|^~,?:"
_OPERATOR_SET = frozenset(OPERATOR_ALPHABET)

_STRING_PREFIX_LETTERS = frozenset("rbfuRBFU")
_NUMBER_SUFFIX = frozenset("fFdDlLuUmM")


class TokenClass(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    OPERATOR = "operator"
    ARGUMENT = "argument"


@dataclass(frozen=True)
class CodeToken:
    """One lexed token: its text, class, byte span, and sequence position."""

    text: str
    token_class: TokenClass
    start: int
    end: int
    index: int

    @property
    def byte_span(self):
        return (self.start, self.end)


@dataclass
class LanguageSpec:
    name: str
    keywords: frozenset
    multichar_operators: tuple
    line_comments: tuple
    block_comments: bool
    casefold_keywords: bool = False
    dollar_identifiers: bool = False
    verbatim_strings: bool = False
    triple_quoted: bool = False
    string_prefixes: bool = False


def _load_table(filename):
    text = resources.files("codeattack.data").joinpath(filename).read_text("utf-8")
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return entries


def _build_specs():
    specs = {}
    specs["java"] = LanguageSpec(
        name="java",
        keywords=frozenset(_load_table("keywords_java.txt")),
        multichar_operators=tuple(
            sorted(_load_table("operators_java.txt"), key=len, reverse=True)
        ),
        line_comments=("//",),
        block_comments=True,
    )
    specs["csharp"] = LanguageSpec(
        name="csharp",
        keywords=frozenset(_load_table("keywords_csharp.txt")),
        multichar_operators=tuple(
            sorted(_load_table("operators_csharp.txt"), key=len, reverse=True)
        ),
        line_comments=("//",),
        block_comments=True,
        verbatim_strings=True,
    )
    specs["python"] = LanguageSpec(
        name="python",
        keywords=frozenset(_load_table("keywords_python.txt")),
        multichar_operators=tuple(
            sorted(_load_table("operators_python.txt"), key=len, reverse=True)
        ),
        line_comments=("#",),
        block_comments=False,
        triple_quoted=True,
        string_prefixes=True,
    )
    specs["php"] = LanguageSpec(
        name="php",
        keywords=frozenset(_load_table("keywords_php.txt")),
        multichar_operators=tuple(
            sorted(_load_table("operators_php.txt"), key=len, reverse=True)
        ),
        line_comments=("//", "#"),
        block_comments=True,
        casefold_keywords=True,
        dollar_identifiers=True,
    )
    return specs


_SPECS = None


def language_spec(language):
    global _SPECS
    if _SPECS is None:
        _SPECS = _build_specs()
    return _SPECS[check_language(language)]


def keywords_for(language):
    return language_spec(language).keywords


class _Scanner:
    def __init__(self, source, spec):
        self.src = source
        self.spec = spec
        self.n = len(source)

    def tokens(self):
        out = []
        i = 0
        while i < self.n:
            ch = self.src[i]
            if ch.isspace():
                i += 1
                continue
            j = self._skip_comment(i)
            if j is not None:
                i = j
                continue
            start, end, token_class = self._next_token(i)
            out.append(
                CodeToken(
                    text=self.src[start:end],
                    token_class=token_class,
                    start=start,
                    end=end,
                    index=len(out),
                )
            )
            i = end
        return out

    # -- trivia ------------------------------------------------------------

    def _skip_comment(self, i):
        src, n = self.src, self.n
        for prefix in self.spec.line_comments:
            if src.startswith(prefix, i):
                # PHP 8 attributes: '#[' is syntax, not a comment.
                if prefix == "#" and self.spec.name == "php" and src.startswith("#[", i):
                    return None
                j = src.find("\n", i)
                return n if j < 0 else j
        if self.spec.block_comments and src.startswith("/*", i):
            j = src.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated block comment", i)
            return j + 2
        return None

    # -- tokens ------------------------------------------------------------

    def _next_token(self, i):
        src = self.src
        ch = src[i]

        if ch in "\"'":
            return self._string(i, i)
        if self.spec.verbatim_strings and ch == "@" and src.startswith('@"', i):
            return self._verbatim_string(i)
        if ch.isdigit() or (ch == "." and i + 1 < self.n and src[i + 1].isdigit()):
            return (i, self._scan_number(i), TokenClass.ARGUMENT)
        if self._is_ident_start(ch):
            return self._identifier(i)
        # maximal munch over the multi-character operator table
        for op in self.spec.multichar_operators:
            if src.startswith(op, i):
                return (i, i + len(op), TokenClass.OPERATOR)
        # any other visible character is a symbol token
        return (i, i + 1, TokenClass.OPERATOR)

    def _is_ident_start(self, ch):
        if ch.isalpha() or ch == "_":
            return True
        if self.spec.dollar_identifiers and ch == "$":
            return True
        if self.spec.verbatim_strings and ch == "@":
            return True
        return False

    def _identifier(self, i):
        src, n = self.src, self.n
        j = i
        prefixed = False
        if src[j] in "$@":
            # $name (PHP variable) / @name (C# escaped identifier); a bare
            # sigil with no name is an ordinary symbol token.
            if j + 1 < n and (src[j + 1].isalpha() or src[j + 1] == "_"):
                j += 1
                prefixed = True
            else:
                return (i, i + 1, TokenClass.OPERATOR)
        while j < n and (src[j].isalnum() or src[j] == "_"):
            j += 1
        word = src[i:j]
        if self.spec.string_prefixes and j < n and src[j] in "\"'":
            if 0 < len(word) <= 3 and all(c in _STRING_PREFIX_LETTERS for c in word):
                return self._string(i, j)
        if prefixed:
            return (i, j, TokenClass.IDENTIFIER)
        lookup = word.lower() if self.spec.casefold_keywords else word
        if lookup in self.spec.keywords:
            return (i, j, TokenClass.KEYWORD)
        return (i, j, TokenClass.IDENTIFIER)

    def _string(self, token_start, quote_pos):
        src, n = self.src, self.n
        quote = src[quote_pos]
        if self.spec.triple_quoted and src.startswith(quote * 3, quote_pos):
            close = src.find(quote * 3, quote_pos + 3)
            if close < 0:
                raise LexError("unterminated string", token_start)
            return (token_start, close + 3, TokenClass.ARGUMENT)
        j = quote_pos + 1
        while j < n:
            if src[j] == "\\":
                j += 2
                continue
            if src[j] == quote:
                return (token_start, j + 1, TokenClass.ARGUMENT)
            j += 1
        raise LexError("unterminated string", token_start)

    def _verbatim_string(self, i):
        src, n = self.src, self.n
        j = i + 2
        while j < n:
            if src[j] == '"':
                if j + 1 < n and src[j + 1] == '"':
                    j += 2
                    continue
                return (i, j + 1, TokenClass.ARGUMENT)
            j += 1
        raise LexError("unterminated string", i)

    def _scan_number(self, i):
        src, n = self.src, self.n
        j = i
        if src[j] == ".":
            j += 1
            while j < n and (src[j].isdigit() or src[j] == "_"):
                j += 1
        elif src[j] == "0" and j + 1 < n and src[j + 1] in "xXbBoO":
            j += 2
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            return j
        else:
            while j < n and (src[j].isdigit() or src[j] == "_"):
                j += 1
            if j + 1 < n and src[j] == "." and src[j + 1].isdigit():
                j += 1
                while j < n and (src[j].isdigit() or src[j] == "_"):
                    j += 1
        if j < n and src[j] in "eE":
            k = j + 1
            if k < n and src[k] in "+-":
                k += 1
            if k < n and src[k].isdigit():
                j = k
                while j < n and src[j].isdigit():
                    j += 1
        while j < n and src[j] in _NUMBER_SUFFIX:
            j += 1
        return j


def tokenize(source, language):
    """Lex ``source`` into classified tokens; raises LexError when the input
    has an unterminated string or block comment."""
    spec = language_spec(language)
    if not isinstance(source, str):
        raise TypeError("source must be str")
    return _Scanner(source, spec).tokens()


def _whitespace_split_tokens(source):
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        if source[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not source[j].isspace():
            j += 1
        tokens.append(
            CodeToken(
                text=source[i:j],
                token_class=TokenClass.IDENTIFIER,
                start=i,
                end=j,
                index=len(tokens),
            )
        )
        i = j
    return tokens


@dataclass
class LexedSource:
    """A source string plus its token sequence; supports rendering edits.

    ``degraded`` marks inputs that failed to lex and fell back to
    whitespace-split identifier tokens.
    """

    source: str
    language: str
    tokens: list = field(default_factory=list)
    degraded: bool = False

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def token_texts(self):
        return [t.text for t in self.tokens]

    def texts_with_edits(self, edits):
        """Token texts after applying ``edits`` (index -> new text or None
        for deletion); deleted and emptied tokens drop out."""
        out = []
        for t in self.tokens:
            if t.index in edits:
                new = edits[t.index]
                if new is None or new == "":
                    continue
                out.append(new)
            else:
                out.append(t.text)
        return out

    def render(self, edits=None):
        """Reconstruct source text, splicing edited token texts into the
        original spans. With no edits this is byte-identical to ``source``."""
        edits = edits or {}
        parts = []
        pos = 0
        for t in self.tokens:
            parts.append(self.source[pos : t.start])
            if t.index in edits:
                new = edits[t.index]
                parts.append("" if new is None else new)
            else:
                parts.append(t.text)
            pos = t.end
        parts.append(self.source[pos:])
        return "".join(parts)


def lex(source, language, lenient=False):
    """Lex into a LexedSource. With ``lenient=True`` a LexError falls back to
    whitespace-split identifier tokens and sets ``degraded``."""
    lang = check_language(language)
    try:
        tokens = tokenize(source, lang)
        return LexedSource(source=source, language=lang, tokens=tokens)
    except LexError:
        if not lenient:
            raise
        logger.warning("lex failed for %s input; using whitespace-split tokens", lang)
        return LexedSource(
            source=source,
            language=lang,
            tokens=_whitespace_split_tokens(source),
            degraded=True,
        )


def operator_multiset(token_text):
    """Counts of operator-alphabet symbols inside ``token_text``; characters
    outside the alphabet are ignored."""
    return Counter(ch for ch in token_text if ch in _OPERATOR_SET)


def operator_count(token_text):
    return sum(operator_multiset(token_text).values())


def class_signature(token_text, language):
    """Ordered classes of the code tokens inside ``token_text``, restricted
    to keyword/identifier/argument (operators are governed separately by the
    operator-count rule). Degrades to [IDENTIFIER] when the text does not lex."""
    try:
        tokens = tokenize(token_text, language)
    except LexError:
        logger.debug("class_signature lex failure for %r; degrading", token_text)
        return [TokenClass.IDENTIFIER]
    return [t.token_class for t in tokens if t.token_class is not TokenClass.OPERATOR]
