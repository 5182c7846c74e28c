#!/usr/bin/env python3
"""
Report Output Helpers
Markdown tables and stable JSON files shared by the analysis and benchmark reports
"""
import json
import os
from typing import Any, Dict, Sequence


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Render a GitHub-flavored markdown table"""
    lines = ['| ' + ' | '.join(str(h) for h in header) + ' |',
             '|' + '|'.join('---' for _ in header) + '|']
    for row in rows:
        lines.append('| ' + ' | '.join(str(cell) for cell in row) + ' |')
    return '\n'.join(lines) + '\n'


def write_text(path: str, text: str) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    return path


def write_json(path: str, data: Dict) -> str:
    """Write JSON with sorted keys so identical data gives identical bytes"""
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + '\n')
