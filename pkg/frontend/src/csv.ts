/**
 * Reader for the sweep CSV contract:
 *   scenario,receiver,scheme,param,value,omega,pd_cf,pd_mc,pfa_mc,status,ms
 *
 * Rows keep their original source line so a plotted subset can be dumped
 * byte-for-byte identical to the input.
 */

export interface CsvRow {
  fields: Record<string, string>;
  line: string;
}

export interface CsvTable {
  header: string[];
  headerLine: string;
  rows: CsvRow[];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV: no header line");
  }
  const header = lines[0].split(",");
  const rows: CsvRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new Error(
        `malformed CSV row (${parts.length} fields, expected ${header.length}): ${line}`,
      );
    }
    const fields: Record<string, string> = {};
    header.forEach((name, i) => {
      fields[name] = parts[i];
    });
    rows.push({ fields, line });
  }
  return { header, headerLine: lines[0], rows };
}

export function requireColumn(table: CsvTable, name: string): void {
  if (!table.header.includes(name)) {
    throw new Error(
      `column '${name}' not in CSV header (${table.header.join(",")})`,
    );
  }
}
