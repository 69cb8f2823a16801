"""Twenty hand-built comparison rows with closed-form expected values.

Each row: app_id, detector ratio, detector presence, linguist Kotlin share,
linguist Java share, expected Kotlin/(Kotlin+Java) share, expected error.
All expected values are written out as exact decimals.
"""

ROWS = [
    ("r01", "1.0", True, "1.0", "0.0", "1", "0"),
    ("r02", "0.0", False, "0.0", "0.0", "0", "0"),
    ("r03", "0.0", False, "0.0", "0.9", "0", "0"),
    ("r04", "0.8", True, "0.25", "0.25", "0.5", "0.3"),
    ("r05", "0.75", True, "0.6", "0.2", "0.75", "0"),
    ("r06", "0.5", True, "0.3", "0.3", "0.5", "0"),
    ("r07", "0.1", True, "0.1", "0.9", "0.1", "0"),
    ("r08", "0.2", True, "0.1", "0.3", "0.25", "0.05"),
    ("r09", "0.9", True, "0.45", "0.05", "0.9", "0"),
    ("r10", "0.4", True, "0.2", "0.2", "0.5", "0.1"),
    ("r11", "0.0", True, "0.0", "1.0", "0", "0"),
    ("r12", "0.6", True, "0.3", "0.1", "0.75", "0.15"),
    ("r13", "0.35", True, "0.4", "0.4", "0.5", "0.15"),
    ("r14", "1.0", True, "0.5", "0.0", "1", "0"),
    ("r15", "0.05", True, "0.02", "0.08", "0.2", "0.15"),
    ("r16", "0.0", False, "0.0", "0.5", "0", "0"),
    ("r17", "0.95", True, "0.8", "0.2", "0.8", "0.15"),
    ("r18", "0.25", True, "0.15", "0.35", "0.3", "0.05"),
    ("r19", "0.7", True, "0.35", "0.15", "0.7", "0"),
    ("r20", "0.125", True, "0.25", "0.75", "0.25", "0.125"),
]
