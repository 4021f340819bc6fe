class ExtractorError(Exception):
    """Base class for extractor failures."""


class PrefillTokenizationError(ExtractorError):
    """The assistant prefill did not tokenize to a clean trailing ':' token.

    Carries the offending token dump so the model's tokenizer behavior can
    be inspected instead of silently probing the wrong position.
    """

    def __init__(self, prefill, token_ids, token_strings):
        self.prefill = prefill
        self.token_ids = list(token_ids)
        self.token_strings = list(token_strings)
        dump = ", ".join(
            f"{i}={s!r}" for i, s in zip(self.token_ids, self.token_strings)
        )
        super().__init__(
            f"prefill {prefill!r} tokenized without a trailing ':' token: [{dump}]"
        )
