"""Prompt templates learned from fixture files exported by the numsim CLI.

The fixture is a fully rendered rating prompt for one known number pair.
Rather than re-implementing the upstream template (and risking drift), the
fixture is split into its blocks and the two number lines are turned into
slots; rendering the fixture pair back through the template is guaranteed
byte-identical to the fixture.
"""

import re
from dataclasses import dataclass

from .errors import ExtractorError

ASSISTANT_PREFILL = "Rating:"

_BASE_LINE_RE = re.compile(r"^Base (\d+) number: ")
_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def to_digits(n, base):
    if n < 0:
        raise ValueError("only non-negative integers are supported")
    if n == 0:
        return "0"
    out = ""
    while n:
        n, r = divmod(n, base)
        out = _DIGITS[r] + out
    return out


@dataclass(frozen=True)
class PromptTemplate:
    question: str
    line_a_prefix: str
    line_a_suffix: str
    line_b_prefix: str
    line_b_suffix: str
    base: int

    def render(self, a, b):
        """Render the full flat prompt (ending in the assistant prefill)."""
        line_a = self.line_a_prefix + to_digits(a, self.base) + self.line_a_suffix
        line_b = self.line_b_prefix + to_digits(b, self.base) + self.line_b_suffix
        return "\n\n".join([self.question, line_a, line_b, ASSISTANT_PREFILL])

    def chat_parts(self, a, b):
        """Split a rendered prompt into (user_content, assistant_prefill).

        Reassembling the two parts reproduces the flat prompt byte for
        byte; the caller packages them as chat messages.
        """
        prompt = self.render(a, b)
        user = prompt[: -len(ASSISTANT_PREFILL)]
        assert user + ASSISTANT_PREFILL == prompt
        return user, ASSISTANT_PREFILL


def _split_number_line(line, rendered_number):
    idx = line.find(rendered_number)
    if idx < 0 or line.find(rendered_number, idx + 1) >= 0:
        raise ExtractorError(
            f"fixture line {line!r} does not contain {rendered_number!r} exactly once"
        )
    return line[:idx], line[idx + len(rendered_number):]


def load_template(path, fixture_pair):
    """Build a template from a fixture file and the pair it was rendered for."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    blocks = text.split("\n\n")
    if len(blocks) != 4 or blocks[3] != ASSISTANT_PREFILL:
        raise ExtractorError(
            f"{path}: expected question/number/number/{ASSISTANT_PREFILL!r} blocks, "
            f"got {len(blocks)}"
        )
    question, line_a, line_b, _ = blocks
    m = _BASE_LINE_RE.match(line_a)
    base = int(m.group(1)) if m else 10
    a, b = fixture_pair
    pa, sa = _split_number_line(line_a, to_digits(a, base))
    pb, sb = _split_number_line(line_b, to_digits(b, base))
    template = PromptTemplate(
        question=question,
        line_a_prefix=pa,
        line_a_suffix=sa,
        line_b_prefix=pb,
        line_b_suffix=sb,
        base=base,
    )
    if template.render(a, b) != text:
        raise ExtractorError(f"{path}: template does not reproduce the fixture")
    return template
