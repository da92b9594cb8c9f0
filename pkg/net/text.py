"""Character front end: text normalization and id mapping."""

import re

import unicodedata

from common.errors import DataError

from net.spec import LINEAGE_VOCAB

PAD = "P"

EOS = "E"


def normalize_text(text: str, vocab: str = LINEAGE_VOCAB) -> str:

    text = "".join(
        ch for ch in unicodedata.normalize("NFD", text)
        if unicodedata.category(ch) != "Mn"
    ).lower()

    allowed = re.escape(vocab[2:])

    text = re.sub(f"[^{allowed}]", " ", text)

    return re.sub(" +", " ", text).strip()


def text_to_ids(text: str, vocab: str = LINEAGE_VOCAB) -> list[int]:

    """Normalized characters followed by the end symbol."""

    index = {ch: i for i, ch in enumerate(vocab)}

    ids = [index[ch] for ch in normalize_text(text, vocab)]

    ids.append(index[EOS])

    return ids


def ids_to_text(ids, vocab: str = LINEAGE_VOCAB) -> str:

    ids = list(ids)

    bad = [i for i in ids if not 0 <= i < len(vocab)]

    if bad:

        raise DataError(f"id {bad[0]} out of range for vocabulary of {len(vocab)}")

    return "".join(vocab[i] for i in ids)
