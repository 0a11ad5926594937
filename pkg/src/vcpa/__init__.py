"""Value-centered privacy assistant: profile mining, acceptability scoring, Mock App Store."""

__version__ = "0.1.0"
