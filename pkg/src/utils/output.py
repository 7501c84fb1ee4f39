import csv
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence

import click


def format_value(value: Any) -> str:
    """
    CSV单元格格式化：浮点数使用最短往返表示（repr），None 输出空串
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def render_csv(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """
    将行数据渲染为CSV文本（逗号分隔、首行表头、LF换行）

    Args:
        rows: 行数据
        columns: 列顺序，缺省取首行的键顺序

    Returns:
        CSV文本
    """
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    """JSON渲染，浮点数由json模块以最短往返形式输出"""
    return json.dumps(payload, ensure_ascii=False) + "\n"


def emit(text: str, out: Optional[str] = None) -> None:
    """写出到文件或标准输出（UTF-8，LF）"""
    if out is None or out == "-":
        click.echo(text, nl=False)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def emit_rows(
    rows: Sequence[Dict[str, Any]],
    fmt: str = "csv",
    out: Optional[str] = None,
    columns: Optional[List[str]] = None
) -> None:
    """按格式输出行数据"""
    if fmt == "json":
        if columns is not None:
            rows = [{column: row.get(column) for column in columns} for row in rows]
        emit(render_json(list(rows)), out)
    else:
        emit(render_csv(rows, columns), out)


def emit_object(payload: Dict[str, Any], fmt: str = "json", out: Optional[str] = None) -> None:
    """输出单个对象，CSV格式时输出一行，列表与字典字段写成JSON文本"""
    if fmt == "csv":
        flat = {
            key: json.dumps(value, ensure_ascii=False) if isinstance(value, (list, dict)) else value
            for key, value in payload.items()
        }
        emit(render_csv([flat]), out)
    else:
        emit(render_json(payload), out)
