/** Service dialog forms, generated from the ParamSpecs the server
 * advertises. Required fields block submission until filled. */

import type { ParamSpecDoc, ServiceDoc, TableView } from "./types.js";

export interface FormHandle {
  element: HTMLFormElement;
  /** Current values keyed by param name; unset optionals are omitted. */
  read(): Record<string, unknown>;
  /** Problems, one per violated required field; empty means submittable. */
  validate(): string[];
}

export function buildServiceForm(
  doc: Document,
  service: ServiceDoc,
  view: TableView | null,
  onSubmit: (values: Record<string, unknown>) => void,
): FormHandle {
  const form = doc.createElement("form");
  form.className = "service-form";
  form.dataset.serviceId = service.serviceId;

  const fields = new Map<string, HTMLInputElement | HTMLSelectElement>();
  for (const spec of service.params) {
    const row = doc.createElement("label");
    row.className = "param";
    row.dataset.param = spec.name;
    const caption = doc.createElement("span");
    caption.textContent = spec.required ? `${spec.name} *` : spec.name;
    row.appendChild(caption);
    const field = buildField(doc, spec, view);
    field.name = spec.name;
    row.appendChild(field);
    fields.set(spec.name, field);
    form.appendChild(row);
  }

  const errorBox = doc.createElement("p");
  errorBox.className = "form-errors";
  form.appendChild(errorBox);

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "run";
  form.appendChild(submit);

  const read = (): Record<string, unknown> => {
    const values: Record<string, unknown> = {};
    for (const spec of service.params) {
      const field = fields.get(spec.name)!;
      const raw = field.value.trim();
      if (raw === "") {
        continue;
      }
      values[spec.name] = spec.type === "NUMBER" ? Number(raw) : raw;
    }
    return values;
  };

  const validate = (): string[] => {
    const problems: string[] = [];
    for (const spec of service.params) {
      const raw = fields.get(spec.name)!.value.trim();
      if (spec.required && raw === "") {
        problems.push(`${spec.name} is required`);
      } else if (spec.type === "NUMBER" && raw !== "" && Number.isNaN(Number(raw))) {
        problems.push(`${spec.name} must be a number`);
      }
    }
    return problems;
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const problems = validate();
    errorBox.textContent = problems.join("; ");
    form.classList.toggle("invalid", problems.length > 0);
    if (problems.length === 0) {
      onSubmit(read());
    }
  });

  return { element: form, read, validate };
}

function buildField(
  doc: Document,
  spec: ParamSpecDoc,
  view: TableView | null,
): HTMLInputElement | HTMLSelectElement {
  if (spec.type === "ENUM") {
    const select = doc.createElement("select");
    if (!spec.required) {
      select.appendChild(new Option("", ""));
    }
    for (const value of spec.enumValues ?? []) {
      select.appendChild(new Option(value, value));
    }
    return select;
  }
  if (spec.type === "COLUMN_REF") {
    const select = doc.createElement("select");
    if (!spec.required) {
      select.appendChild(new Option("", ""));
    }
    for (const column of view?.table.columns ?? []) {
      select.appendChild(new Option(column.header, column.id));
    }
    return select;
  }
  const input = doc.createElement("input");
  input.type = "text";
  if (spec.type === "NUMBER") {
    // text + numeric inputmode keeps bad input visible for validation;
    // type=number would silently blank it
    input.inputMode = "numeric";
  } else if (spec.type === "KG_TYPE") {
    input.placeholder = "type id, e.g. urn:mock:type:City";
  }
  return input;
}
