"""Stand-in simulator: prints canned measurements derived from the deck."""
import sys

deck = open(sys.argv[1]).read()
lines = [ln for ln in deck.splitlines() if ln.startswith("X")]
print("* stub run")
print(f"gain = {10 + 2 * len(lines)}")
print("ugbw = 2meg")
print(f"pm = {40 + len(lines)}")
print("power = 9.45p")
