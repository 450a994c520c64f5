import numpy as np

from cayleywalk.group_words import ROOT, Presentation, apply_letter


def bfs_words(p: Presentation, depth: int) -> list[list[tuple]]:
    """All reduced words by distance, [0..depth], via neighbor expansion."""
    levels = [[ROOT]]
    for _ in range(depth):
        nxt = []
        for w in levels[-1]:
            for s in range(p.d):
                y = apply_letter(p, w, s)
                if len(y) > len(w):
                    nxt.append(y)
        levels.append(nxt)
    return levels


def random_reduced_word(p: Presentation, length: int, rs: np.random.RandomState) -> tuple:
    word: tuple = ROOT
    while len(word) < length:
        s = int(rs.randint(0, p.d))
        if word and word[0] == p.inverse(s):
            continue
        word = (s,) + word
    return word
