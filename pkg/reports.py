# -*- coding: utf-8 -*-
"""Отчёты по батареям проверок и досье конвейера: текст, CSV, JSON и сводка в консоль"""

import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from analysis import CheckReport
from profile_io import write_json

logger = logging.getLogger(__name__)

CHECK_COLUMNS = ['name', 'status', 'sup_residual', 'tolerance', 'order_estimate', 'method', 'notes']


class ReportWriter:
    """Запись результатов проверок в out_dir/<prefix>.txt, .csv и _detailed.json"""

    def __init__(self, out_dir: str, prefix: str = "checks", float_format: str = "%.17g"):
        self.out_dir = out_dir
        self.prefix = prefix
        self.float_format = float_format
        self.results: List[Dict[str, Any]] = []
        self.context: Dict[str, Any] = {}
        os.makedirs(out_dir, exist_ok=True)

    @property
    def text_file(self) -> str:
        return os.path.join(self.out_dir, f"{self.prefix}.txt")

    @property
    def csv_file(self) -> str:
        return os.path.join(self.out_dir, f"{self.prefix}.csv")

    @property
    def json_file(self) -> str:
        return os.path.join(self.out_dir, f"{self.prefix}_detailed.json")

    def add_checks(self, reports: Sequence[CheckReport], **context: Any):
        self.results.extend(report.to_dict() for report in reports)
        self.context.update(context)

    def add_records(self, records: Sequence[Dict[str, Any]], **context: Any):
        self.results.extend(records)
        self.context.update(context)

    @property
    def passed(self) -> bool:
        return all(r['pass'] for r in self.results if r.get('status') != 'hypothesis-violation')

    def generate_report(self) -> bool:
        """Текстовый отчёт"""
        try:
            with open(self.text_file, 'w', encoding='utf-8') as f:
                f.write("Отчет проверок expanderlab\n")
                f.write(f"Дата: {datetime.now().strftime('%d.%m.%Y %H:%M')}\n")
                for key, value in self.context.items():
                    f.write(f"{key}: {value}\n")
                f.write(f"Всего проверок: {len(self.results)}\n")
                f.write(f"Пройдено: {sum(1 for r in self.results if r['pass'])}\n")
                f.write("=" * 80 + "\n\n")

                for i, result in enumerate(self.results, 1):
                    f.write(f"Проверка № {i}. {result['name']}: {result['status']}\n")
                    if result['status'] == 'hypothesis-violation':
                        f.write(f"Предположение не выполнено: {result['notes']}\n")
                    else:
                        f.write(f"Невязка: {result['sup_residual']:.6e} (допуск {result['tolerance']:.1e})\n")
                        if result.get('method'):
                            f.write(f"[Метод: {result['method']}]\n")
                    f.write("\n")

            logger.info(f"Отчет сохранен в файл: {self.text_file}")
            return True

        except Exception as e:
            logger.error(f"Ошибка сохранения отчета: {e}")
            return False

    def generate_csv_report(self) -> bool:
        """Таблица проверок в CSV"""
        try:
            frame = pd.DataFrame(self.results)
            for name in CHECK_COLUMNS:
                if name not in frame.columns:
                    frame[name] = ''
            frame[CHECK_COLUMNS].to_csv(self.csv_file, index=False, float_format=self.float_format)
            logger.info(f"CSV отчет сохранен в файл: {self.csv_file}")
            return True

        except Exception as e:
            logger.error(f"Ошибка сохранения CSV отчета: {e}")
            return False

    def generate_detailed_report(self, extra: Optional[Dict[str, Any]] = None) -> bool:
        """Детальный отчёт в JSON"""
        try:
            report_data = {
                'timestamp': datetime.now().isoformat(),
                'context': self.context,
                'total_checks': len(self.results),
                'passed_checks': sum(1 for r in self.results if r['pass']),
                'passed': self.passed,
                'results': self.results,
            }
            if extra:
                report_data.update(extra)
            write_json(report_data, self.json_file)
            logger.info(f"Детальный отчет сохранен в файл: {self.json_file}")
            return True

        except Exception as e:
            logger.error(f"Ошибка сохранения детального отчета: {e}")
            return False

    def write_all(self, extra: Optional[Dict[str, Any]] = None) -> bool:
        return all([self.generate_report(), self.generate_csv_report(),
                    self.generate_detailed_report(extra)])

    def print_summary(self):
        """Сводка в консоль"""
        passed = sum(1 for r in self.results if r['status'] == 'pass')
        skipped = sum(1 for r in self.results if r['status'] == 'hypothesis-violation')

        print("\n" + "=" * 60)
        print("СВОДКА ПРОВЕРОК")
        print("=" * 60)
        print(f"Всего проверок: {len(self.results)}")
        print(f"Пройдено: {passed}")
        print(f"Предположение не выполнено: {skipped}")
        print(f"Провалено: {len(self.results) - passed - skipped}")
        print(f"Текстовый отчет: {self.text_file}")
        print(f"CSV отчет: {self.csv_file}")

        failed = [r for r in self.results if r['status'] == 'fail']
        if failed:
            print("\nПроваленные проверки:")
            for result in failed:
                print(f"  {result['name']}: {result['sup_residual']:.3e} > {result['tolerance']:.1e}")
