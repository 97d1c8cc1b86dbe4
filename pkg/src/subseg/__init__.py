"""Unsupervised subword segmentation, boundary marking and vocabularies."""

from .baseline import (
    SegmentationModel,
    load_lexicon,
    log_star,
    save_lexicon,
    segment_sentence,
    segment_word,
    train_segmentation,
)
from .marking import apply_marking, detokenize, mark_sentence
from .vocab import (
    EOS_ID,
    MASK_ID,
    NUM_SPECIAL,
    PAD_ID,
    SOS_ID,
    SPECIAL_TOKENS,
    UNK_ID,
    SubwordVocab,
    build_vocab,
    load_vocab,
    save_vocab,
)
