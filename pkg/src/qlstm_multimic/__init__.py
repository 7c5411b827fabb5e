"""Quaternion LSTM library and multi-microphone experiment harness."""

__version__ = "0.1.0"
