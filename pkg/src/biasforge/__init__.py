"""biasforge: text-side tooling for contextual multi-talker ASR.

Builds and filters rare-word biasing lists against first-pass hypotheses,
constructs prompts, talks to a correction endpoint (or a deterministic
offline mock), and scores WER / B-WER / U-WER over serialized multi-talker
transcripts.
"""

__version__ = "0.1.0"

from biasforge._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
