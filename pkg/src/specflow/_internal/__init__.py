"""Private utilities; not part of the public API."""
