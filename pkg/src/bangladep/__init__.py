"""Depression detection in Bangla social-media posts with a CNN-BiLSTM classifier."""

__version__ = "0.1.0"
