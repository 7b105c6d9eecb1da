from .estimator import CommentGenerator
from .network import Batch, DecodeState, Encoded, Seq2SeqNetwork, StepOutput, make_batch, sequence_loss
from .search import Hypothesis, beam_search, strip_special, unk_replace
from .vocab import END, PAD, SEP_ID, SPECIALS, START, UNK, Vocabulary
